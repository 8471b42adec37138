#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

/// A power-law fit whose local exponent is not stable across its window.
class FitUnstable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---- time --------------------------------------------------------------

/// ds/dt = (n-2)/((n-1)(n+2)) between PDE time t and Yamabe-flow time s.
inline double flow_time_slope(int n) {
    if (n < 3) throw ParameterError("flow time requires n >= 3");
    return static_cast<double>(n - 2) / static_cast<double>((n - 1) * (n + 2));
}

inline double flow_time_from_pde_time(int n, double t) {
    if (!(t >= 0.0)) throw ParameterError("time must be >= 0");
    return flow_time_slope(n) * t;
}

inline double pde_time_from_flow_time(int n, double s) {
    if (!(s >= 0.0)) throw ParameterError("time must be >= 0");
    return s / flow_time_slope(n);
}

// ---- profiles ----------------------------------------------------------

/// Signed length ∫_1^r u^{2/(n+2)} by the trapezoid rule, accumulated outward
/// from the node at r = 1 with compensated summation.
inline std::vector<double> arc_length(const RadialGrid& g, std::span<const double> u, int n) {
    if (u.size() != g.size()) throw GridError("field/grid size mismatch");
    const double e = 2.0 / (n + 2);
    const std::size_t k0 = g.unit_index();
    std::vector<double> phi(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) phi[i] = std::pow(u[i], e);

    std::vector<double> rho(u.size(), 0.0);
    auto sweep = [&](std::size_t from, auto next, auto done, double sign) {
        double sum = 0.0;
        double comp = 0.0;
        for (std::size_t i = from; !done(i);) {
            const std::size_t j = next(i);
            const double term = sign * 0.5 * (phi[i] + phi[j]) * std::abs(g[j] - g[i]);
            const double s = sum + term;
            comp += std::abs(sum) >= std::abs(term) ? (sum - s) + term : (term - s) + sum;
            sum = s;
            rho[j] = sum + comp;
            i = j;
        }
    };
    sweep(k0, [](std::size_t i) { return i + 1; }, [&](std::size_t i) { return i + 1 >= u.size(); }, 1.0);
    sweep(k0, [](std::size_t i) { return i - 1; }, [&](std::size_t i) { return i == g.first_positive(); }, -1.0);
    return rho;
}

/// F = r² u^{4/(n+2)} at every node.
inline std::vector<double> warping_function(const RadialGrid& g, std::span<const double> u, int n) {
    std::vector<double> F(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) F[i] = g[i] * g[i] * std::pow(u[i], 4.0 / (n + 2));
    return F;
}

struct WarpingSample {
    double rho;  // ρ + shift
    double F;
};

inline std::vector<WarpingSample> warping_profile(const RadialGrid& g, std::span<const double> u, int n,
                                                  double shift) {
    const std::vector<double> rho = arc_length(g, u, n);
    const std::vector<double> F = warping_function(g, u, n);
    std::vector<WarpingSample> out(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) out[i] = {rho[i] + shift, F[i]};
    return out;
}

/// -(4(n-1)/(n-2)) v^{-(n+2)/(n-2)} Δv with v = u^{(n-2)/(n+2)}; interior nodes,
/// entry k belongs to node k+1.
inline std::vector<double> scalar_curvature(const RadialGrid& g, std::span<const double> u, int n) {
    const double mc = critical_exponent(n);
    std::vector<double> v(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::pow(u[i], mc);
    std::vector<double> lap = radial_laplacian(g, n, v);
    const double k = -4.0 * (n - 1) / (n - 2.0);
    for (std::size_t j = 0; j < lap.size(); ++j) lap[j] *= k / u[j + 1];
    return lap;
}

inline std::vector<double> scalar_curvature(const RadialField& f, const FlowParams& p) {
    p.require_geometry();
    return scalar_curvature(*f.grid, f.values, p.n());
}

/// scal(g0) for u = u0 in closed form: (4(n-1)/(n-2)) c1^m mλ(n-2-mλ) r^{-mλ-2} / u0.
inline double scalar_curvature_initial(const FlowParams& p, double r) {
    p.require_geometry();
    const int n = p.n();
    const double ml = p.m() * p.lambda();
    return 4.0 * (n - 1) / (n - 2.0) * std::pow(p.c1(), p.m()) * ml * (n - 2 - ml) * std::pow(r, -ml - 2.0) /
           initial_profile(p, r);
}

struct GeometryProfile {
    double t = 0.0;
    GridPtr grid;
    std::vector<double> rho;
    std::vector<double> F;
    std::vector<double> conformal;    // u^{4/(n+2)}
    std::vector<double> scal;         // interior nodes only; entry k is node k+1
    std::vector<double> vol_density;  // u^{2n/(n+2)}
    double inner_length = 0.0;
    double outer_length = 0.0;
};

inline GeometryProfile geometry_profile(const RadialField& f, const FlowParams& p) {
    p.require_geometry();
    const int n = p.n();
    GeometryProfile gp;
    gp.t = f.time;
    gp.grid = f.grid;
    gp.rho = arc_length(*f.grid, f.values, n);
    gp.F = warping_function(*f.grid, f.values, n);
    gp.conformal.resize(f.size());
    gp.vol_density.resize(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        gp.conformal[i] = std::pow(f.values[i], 4.0 / (n + 2));
        gp.vol_density[i] = std::pow(f.values[i], 2.0 * n / (n + 2));
    }
    gp.scal = scalar_curvature(*f.grid, f.values, n);
    gp.inner_length = gp.rho.front();
    gp.outer_length = gp.rho.back();
    return gp;
}

// ---- completeness ------------------------------------------------------

struct EndCompleteness {
    double exponent = 0.0;  // e in u^{2/(n+2)} ~ r^e
    double spread = 0.0;    // max - min local exponent over the window
    bool complete = false;
    bool boundary_case = false;
    double truncated_length = 0.0;
};

struct CompletenessReport {
    EndCompleteness inner;
    EndCompleteness outer;
};

inline constexpr double kExponentSpreadLimit = 0.1;
inline constexpr double kBoundaryExponentTol = 1e-6;

namespace detail {

inline EndCompleteness end_exponent(const RadialGrid& g, std::span<const double> u, int n, IndexWindow w,
                                    const char* name) {
    if (w.last <= w.first) throw FitUnstable(std::string(name) + " end window has fewer than 2 nodes");
    const double e = 2.0 / (n + 2);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double cnt = static_cast<double>(w.count());
    for (std::size_t i = w.first; i <= w.last; ++i) {
        const double x = std::log(g[i]);
        const double y = e * std::log(u[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        if (i < w.last) {
            const double local = e * (std::log(u[i + 1]) - std::log(u[i])) / (std::log(g[i + 1]) - x);
            lo = std::min(lo, local);
            hi = std::max(hi, local);
        }
    }
    EndCompleteness ec;
    ec.exponent = (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
    ec.spread = hi - lo;
    if (ec.spread > kExponentSpreadLimit) {
        throw FitUnstable(std::string(name) + " end: local exponent varies by " + fmt_num(ec.spread) +
                          " across the fitting decade");
    }
    ec.boundary_case = std::abs(ec.exponent + 1.0) <= kBoundaryExponentTol;
    return ec;
}

}  // namespace detail

/// Classifies each end by the exponent of the length integrand: the inner end
/// has infinite length iff e <= -1, the outer end iff e >= -1.
inline CompletenessReport completeness_indicator(const RadialGrid& g, std::span<const double> u, int n,
                                                 std::size_t skip = 5) {
    CompletenessReport rep;
    rep.inner = detail::end_exponent(g, u, n, g.inner_decade(skip), "inner");
    rep.outer = detail::end_exponent(g, u, n, g.outer_decade(skip), "outer");
    rep.inner.complete = rep.inner.exponent <= -1.0 + kBoundaryExponentTol;
    rep.outer.complete = rep.outer.exponent >= -1.0 - kBoundaryExponentTol;
    const std::vector<double> rho = arc_length(g, u, n);
    rep.inner.truncated_length = -rho.front();
    rep.outer.truncated_length = rho.back();
    return rep;
}

inline CompletenessReport completeness_indicator(const RadialField& f, const FlowParams& p, std::size_t skip = 5) {
    p.require_geometry();
    return completeness_indicator(*f.grid, f.values, p.n(), skip);
}

// ---- end asymptotics ---------------------------------------------------

enum class EndId { E1, E2 };  // E1 outer (Euclidean), E2 inner (conical)

inline const char* to_string(EndId e) { return e == EndId::E1 ? "E1" : "E2"; }

/// B = (2λ/(n+2) - 1)².
inline double cone_b(int n, double lambda) {
    const double s = 2.0 * lambda / (n + 2) - 1.0;
    return s * s;
}

/// τ = ((n-6)λ/(n+2) + 2) / (2λ/(n+2) - 1).
inline double cone_tau(int n, double lambda) {
    return ((n - 6) * lambda / (n + 2) + 2.0) / (2.0 * lambda / (n + 2) - 1.0);
}

inline double euclidean_order(int n, double lambda) { return critical_exponent(n) * lambda - 2.0; }

struct EndFit {
    EndId end = EndId::E1;
    double slope = 0.0;      // s in √F ≈ s(ρ' ) with ρ' = ±ρ + shift
    double order = 0.0;      // E1: Euclidean order; E2: τ̂. NaN when skipped
    bool order_fitted = false;
    double residual = 0.0;   // rms of the model misfit relative to max √F
    double shift = 0.0;
    double ref_slope = 0.0;
    double ref_order = 0.0;
    std::size_t nodes = 0;
    bool tau_sign_disagrees = false;
};

struct EndFitOptions {
    std::size_t skip = 5;
    std::size_t min_nodes = 8;
    double q_min = 0.25;
    double q_max = 12.0;
    double q_step = 0.125;
    /// Remainders below this fraction of max √F are treated as rounding.
    double rounding_floor = 1e-12;
};

namespace detail {

struct LinearFit {
    Eigen::VectorXd coef;
    double rss;
};

inline LinearFit least_squares(const Eigen::MatrixXd& A, const Eigen::VectorXd& y) {
    Eigen::VectorXd scale = A.colwise().lpNorm<Eigen::Infinity>().transpose();
    for (Eigen::Index j = 0; j < scale.size(); ++j)
        if (scale(j) == 0.0) scale(j) = 1.0;
    const Eigen::MatrixXd As = A * scale.cwiseInverse().asDiagonal();
    Eigen::VectorXd c = As.colPivHouseholderQr().solve(y);
    const double rss = (As * c - y).squaredNorm();
    return {c.cwiseQuotient(scale), rss};
}

inline LinearFit fit_with_order(const Eigen::VectorXd& x, const Eigen::VectorXd& y, double q) {
    Eigen::MatrixXd A(x.size(), 3);
    A.col(0) = x;
    A.col(1).setOnes();
    A.col(2) = x.array().pow(-q).matrix();
    return least_squares(A, y);
}

}  // namespace detail

/// Fits √F = s x + c0 + C x^{-q} with x = ρ (E1) or x = -ρ (E2) over the
/// outermost/innermost decade. The shift is c0/s; the order is q - 1.
inline EndFit fit_end_asymptotics(const GeometryProfile& gp, EndId end, const FlowParams& p,
                                  const EndFitOptions& opt = {}) {
    p.require_geometry();
    const RadialGrid& g = *gp.grid;
    const IndexWindow w = end == EndId::E1 ? g.outer_decade(opt.skip) : g.inner_decade(opt.skip);
    if (w.last < w.first || w.count() < opt.min_nodes) {
        throw FitUnstable(std::string(to_string(end)) + " fit window has fewer than " +
                          std::to_string(opt.min_nodes) + " nodes");
    }
    const auto cnt = static_cast<Eigen::Index>(w.count());
    Eigen::VectorXd x(cnt), y(cnt);
    for (Eigen::Index j = 0; j < cnt; ++j) {
        const std::size_t i = w.first + static_cast<std::size_t>(j);
        x(j) = end == EndId::E1 ? gp.rho[i] : -gp.rho[i];
        y(j) = std::sqrt(gp.F[i]);
    }
    if (x.minCoeff() <= 0.0) throw FitUnstable(std::string(to_string(end)) + " window straddles rho = 0");
    const double yscale = y.cwiseAbs().maxCoeff();

    EndFit fit;
    fit.end = end;
    fit.nodes = w.count();
    if (end == EndId::E1) {
        fit.ref_slope = 1.0;
        fit.ref_order = euclidean_order(p.n(), p.lambda());
    } else {
        fit.ref_slope = std::sqrt(cone_b(p.n(), p.lambda()));
        fit.ref_order = cone_tau(p.n(), p.lambda());
    }

    Eigen::MatrixXd A2(cnt, 2);
    A2.col(0) = x;
    A2.col(1).setOnes();
    const detail::LinearFit lin = detail::least_squares(A2, y);
    const double lin_max = (A2 * lin.coef - y).cwiseAbs().maxCoeff();
    if (lin_max <= opt.rounding_floor * yscale) {
        fit.slope = lin.coef(0);
        fit.shift = lin.coef(1) / lin.coef(0);
        fit.order = std::numeric_limits<double>::quiet_NaN();
        fit.residual = std::sqrt(lin.rss / static_cast<double>(cnt)) / yscale;
        return fit;
    }

    auto rss = [&](double q) { return detail::fit_with_order(x, y, q).rss; };
    double best_q = opt.q_min;
    double best = std::numeric_limits<double>::infinity();
    for (double q = opt.q_min; q <= opt.q_max + 1e-12; q += opt.q_step) {
        const double r = rss(q);
        if (r < best) {
            best = r;
            best_q = q;
        }
    }
    double a = std::max(opt.q_min, best_q - opt.q_step);
    double b = std::min(opt.q_max, best_q + opt.q_step);
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - gr * (b - a);
    double d = a + gr * (b - a);
    double fc = rss(c), fd = rss(d);
    for (int it = 0; it < 100 && b - a > 1e-10; ++it) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - gr * (b - a);
            fc = rss(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + gr * (b - a);
            fd = rss(d);
        }
    }
    const double q = 0.5 * (a + b);
    const detail::LinearFit nl = detail::fit_with_order(x, y, q);
    fit.slope = nl.coef(0);
    fit.shift = nl.coef(1) / nl.coef(0);
    fit.order = q - 1.0;
    fit.order_fitted = true;
    fit.residual = std::sqrt(nl.rss / static_cast<double>(cnt)) / yscale;
    if (end == EndId::E2) fit.tau_sign_disagrees = (fit.order > 0.0) != (fit.ref_order > 0.0);
    return fit;
}

// ---- flow residual -----------------------------------------------------

struct FlowResidualRow {
    double t;
    double max_abs;
    double max_rel;  // |R| / u
};

/// R = (u^{k+1} - u^{k-1})/(t_{k+1} - t_{k-1}) - Δ(u^k)^{m_c} at interior free
/// nodes, for each interior stored time k.
inline std::vector<FlowResidualRow> yamabe_flow_residual(const Trajectory& tr) {
    const FlowParams& p = tr.params;
    if (!p.is_critical()) throw GeometryDomainError("flow residual requires the critical exponent");
    if (tr.size() < 3) throw ParameterError("flow residual needs at least 3 stored times");
    const RadialGrid& g = *tr.grid;
    const double m = p.m();
    std::vector<FlowResidualRow> out;
    std::vector<double> v(g.size());
    for (std::size_t k = 1; k + 1 < tr.size(); ++k) {
        const std::vector<double>& u = tr.fields[k];
        for (std::size_t i = 0; i < u.size(); ++i) v[i] = std::pow(u[i], m);
        const std::vector<double> lap = radial_laplacian(g, p.n(), v);
        const double dt = tr.times[k + 1] - tr.times[k - 1];
        FlowResidualRow row{tr.times[k], 0.0, 0.0};
        for (std::size_t i = 1; i + 1 < g.size(); ++i) {
            const double r = (tr.fields[k + 1][i] - tr.fields[k - 1][i]) / dt - lap[i - 1];
            row.max_abs = std::max(row.max_abs, std::abs(r));
            row.max_rel = std::max(row.max_rel, std::abs(r) / u[i]);
        }
        out.push_back(row);
    }
    return out;
}

// ---- volume and Yamabe constant ---------------------------------------

struct VolumeLimits {
    double inner = 0.0;
    double outer = 0.0;
    double inner_ref = 0.0;  // c1^{2n/(n+2)}
    double outer_ref = 0.0;  // c2^{2n/(n+2)}
};

namespace detail {

/// Aitken Δ² on three samples ordered toward the limit from q2 to q0 at a
/// constant node stride; falls back to the sample nearest the end when the extrapolation is not well conditioned.
inline double aitken_limit(double q0, double q1, double q2) {
    const double d1 = q1 - q0;
    const double d2 = q2 - q1;
    const double den = d2 - d1;
    if (den == 0.0 || d2 == 0.0 || d1 / d2 <= 0.0 || d1 / d2 >= 1.0) return q0;
    const double lim = q0 - d1 * d1 / den;
    return std::abs(lim - q0) <= std::abs(q2 - q0) ? lim : q0;
}

}  // namespace detail

/// r^{2nλ/(n+2)} u^{2n/(n+2)} toward r → 0 and u^{2n/(n+2)} toward r → ∞,
/// extrapolated from the end decades.
inline VolumeLimits volume_form_limits(const RadialField& f, const FlowParams& p, std::size_t skip = 5) {
    p.require_geometry();
    const RadialGrid& g = *f.grid;
    const int n = p.n();
    const double ev = 2.0 * n / (n + 2);
    const double er = 2.0 * n * p.lambda() / (n + 2);
    auto q_in = [&](std::size_t i) { return std::exp(er * std::log(g[i]) + ev * std::log(f.values[i])); };
    auto q_out = [&](std::size_t i) { return std::pow(f.values[i], ev); };

    const IndexWindow wi = g.inner_decade(skip);
    const IndexWindow wo = g.outer_decade(skip);
    const std::size_t si = std::max<std::size_t>(1, (wi.count() - 1) / 2);
    const std::size_t so = std::max<std::size_t>(1, (wo.count() - 1) / 2);

    VolumeLimits v;
    v.inner = detail::aitken_limit(q_in(wi.first), q_in(wi.first + si), q_in(wi.first + 2 * si));
    v.outer = detail::aitken_limit(q_out(wo.last), q_out(wo.last - so), q_out(wo.last - 2 * so));
    v.inner_ref = std::pow(p.c1(), ev);
    v.outer_ref = std::pow(p.c2(), ev);
    return v;
}

/// Vol(S^n) by the recurrence Vol(S^n) = 2π/(n-1) Vol(S^{n-2}).
inline double sphere_volume(int n) {
    if (n < 0) throw ParameterError("sphere dimension must be >= 0");
    double v = (n % 2 == 0) ? 2.0 : 2.0 * std::numbers::pi;
    for (int k = (n % 2 == 0) ? 2 : 3; k <= n; k += 2) v *= 2.0 * std::numbers::pi / (k - 1);
    return v;
}

/// Y(S^n) = n(n-1) Vol(S^n)^{2/n}.
inline double yamabe_constant_sphere(int n) {
    if (n < 3) throw ParameterError("Yamabe constant requires n >= 3");
    return n * (n - 1.0) * std::pow(sphere_volume(n), 2.0 / n);
}

}  // namespace fastdiff
