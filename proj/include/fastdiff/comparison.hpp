#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastdiff/params.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

/// No admissible (ν, μ, δ, A) exists at floating precision.
class InfeasibleWindow : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Open intervals the subsolution constants must lie in:
///   λ - (2/m)((λ/2)(1-m) - 1) < ν < λ < (n-2)/m < μ < (2n-2)/m,
///   (μ-λ)/(μ-ν) < δ < 1.
struct ConstantWindows {
    double nu_lo, nu_hi;
    double mu_lo, mu_hi;

    static ConstantWindows of(const FlowParams& p) {
        const double m = p.m();
        const double lam = p.lambda();
        return {lam - (2.0 / m) * (0.5 * lam * (1.0 - m) - 1.0), lam, (p.n() - 2) / m, (2.0 * p.n() - 2) / m};
    }

    static double delta_lo(const FlowParams& p, double nu, double mu) { return (mu - p.lambda()) / (mu - nu); }
};

/// Constants of the three-piece subsolution.
struct SubsolutionConfig {
    double nu = 0.0;
    double mu = 0.0;
    double delta = 0.0;
    double A = 0.0;
};

/// Left-hand side minus right-hand side of the lower bound on A that keeps
/// ρ(t) < σ(t); positive means satisfied. Only meaningful for c2 > 0.
inline double a_condition_interfaces(const FlowParams& p, const SubsolutionConfig& c, double A) {
    const double m = p.m();
    const double k = 1.0 / (m * (p.lambda() - c.nu));
    const double log_lhs = std::log(p.c1() / p.c2()) / c.mu + std::log(1.0 - c.delta) / (m * c.mu) +
                           k * (c.mu - p.lambda()) / c.mu * std::log(c.delta) +
                           k * p.lambda() / c.mu * std::log(A);
    const double log_rhs = k * std::log(c.delta);
    return std::exp(log_lhs) - std::exp(log_rhs);
}

/// c1^{1-m} A (1-δ)^{1/m-1} - n m² λ; positive means satisfied.
inline double a_condition_inner(const FlowParams& p, const SubsolutionConfig& c, double A) {
    const double m = p.m();
    return std::pow(p.c1(), 1.0 - m) * A * std::pow(1.0 - c.delta, 1.0 / m - 1.0) - p.n() * m * m * p.lambda();
}

/// Checks every window of the subsolution constants; throws InfeasibleWindow
/// naming the first violated inequality.
inline void validate_config(const FlowParams& p, const SubsolutionConfig& c) {
    const ConstantWindows w = ConstantWindows::of(p);
    auto fail = [](const std::string& what) { throw InfeasibleWindow("subsolution constants: " + what); };
    if (!(c.nu > w.nu_lo && c.nu < w.nu_hi)) fail("nu outside (" + detail::fmt_num(w.nu_lo) + ", lambda)");
    if (!(c.mu > w.mu_lo && c.mu < w.mu_hi)) fail("mu outside ((n-2)/m, (2n-2)/m)");
    const double dlo = ConstantWindows::delta_lo(p, c.nu, c.mu);
    if (!(c.delta > dlo && c.delta < 1.0)) fail("delta outside ((mu-lambda)/(mu-nu), 1)");
    if (!(c.A > 1.0)) fail("A > 1 violated");
    if (!(a_condition_inner(p, c, c.A) > 0.0)) fail("A too small for the inner-region residual bound");
    if (p.c2() > 0.0 && !(a_condition_interfaces(p, c, c.A) > 0.0)) fail("A too small for rho(t) < sigma(t)");
}

/// Smallest A in [1, 1e12] satisfying both lower bounds, by bisection in log A.
inline double minimal_amplitude(const FlowParams& p, SubsolutionConfig c) {
    auto ok = [&](double A) {
        return a_condition_inner(p, c, A) > 0.0 && (p.c2() == 0.0 || a_condition_interfaces(p, c, A) > 0.0);
    };
    double lo = 0.0;                 // log 1
    double hi = std::log(1e12);
    if (!ok(std::exp(hi))) throw InfeasibleWindow("no amplitude A <= 1e12 satisfies the lower bounds");
    if (ok(1.0)) return 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (ok(std::exp(mid)) ? hi : lo) = mid;
    }
    return std::exp(hi);
}

/// Places ν, μ, δ at fractions of their windows (0.5 = midpoint) and sets
/// A = (1 + margin) A* with A* the minimal admissible amplitude.
inline SubsolutionConfig config_at_fractions(const FlowParams& p, double f_nu, double f_mu, double f_delta,
                                             double margin = 0.1) {
    if (p.is_degenerate()) throw InfeasibleWindow("subsolution requires c1 > 0");
    const ConstantWindows w = ConstantWindows::of(p);
    if (!(w.nu_hi - w.nu_lo > kWindowSlack) || !(w.mu_hi - w.mu_lo > kWindowSlack)) {
        throw InfeasibleWindow("empty nu or mu window");
    }
    SubsolutionConfig c;
    c.nu = w.nu_lo + f_nu * (w.nu_hi - w.nu_lo);
    c.mu = w.mu_lo + f_mu * (w.mu_hi - w.mu_lo);
    const double dlo = ConstantWindows::delta_lo(p, c.nu, c.mu);
    if (!(1.0 - dlo > kWindowSlack)) throw InfeasibleWindow("empty delta window");
    c.delta = dlo + f_delta * (1.0 - dlo);
    c.A = (1.0 + margin) * minimal_amplitude(p, c);
    validate_config(p, c);
    return c;
}

inline SubsolutionConfig pick_admissible_config(const FlowParams& p, double margin = 0.1) {
    return config_at_fractions(p, 0.5, 0.5, 0.5, margin);
}

/// a(t), ρ(t), b(t), σ(t) in log form; σ = +inf when c2 = 0.
struct SubsolutionState {
    double log_a, log_rho, log_b, log_sigma;

    double a() const { return std::exp(log_a); }
    double rho() const { return std::exp(log_rho); }
    double b() const { return std::exp(log_b); }
    double sigma() const { return std::exp(log_sigma); }
};

inline SubsolutionState subsolution_state(const FlowParams& p, const SubsolutionConfig& c, double t) {
    const double m = p.m();
    SubsolutionState s{};
    s.log_a = std::log(c.A) + t;
    s.log_rho = (std::log(c.delta) - s.log_a) / (m * (p.lambda() - c.nu));
    s.log_b = std::log(1.0 - c.delta) + m * (c.mu - p.lambda()) * s.log_rho;
    s.log_sigma = p.c2() > 0.0 ? (std::log(p.c1()) - std::log(p.c2())) / c.mu + s.log_b / (m * c.mu)
                               : std::numeric_limits<double>::infinity();
    return s;
}

/// ū = u0: time-independent supersolution.
inline double supersolution(const FlowParams& p, double r, double /*t*/) { return initial_profile(p, r); }

/// ∂t ū - Δ(ū^m) = c1^m mλ(n-2-mλ) r^{-mλ-2}.
inline double supersolution_residual(const FlowParams& p, double r) {
    const double ml = p.m() * p.lambda();
    return std::pow(p.c1(), p.m()) * ml * (p.n() - 2 - ml) * std::pow(r, -ml - 2.0);
}

enum class SubsolutionPiece { Inner, Middle, Outer };

inline SubsolutionPiece piece_at(const SubsolutionState& s, double r) {
    const double lr = std::log(r);
    if (lr <= s.log_rho) return SubsolutionPiece::Inner;
    if (lr <= s.log_sigma) return SubsolutionPiece::Middle;
    return SubsolutionPiece::Outer;
}

namespace detail {

/// log(r^{-mλ} - a r^{-mν}) for r with a r^{m(λ-ν)} < 1, else -inf.
inline double log_inner_bracket(const FlowParams& p, const SubsolutionConfig& c, double log_a, double lr) {
    const double m = p.m();
    const double x = std::exp(log_a + m * (p.lambda() - c.nu) * lr);
    if (x >= 1.0) return -std::numeric_limits<double>::infinity();
    return -m * p.lambda() * lr + std::log1p(-x);
}

}  // namespace detail

/// ŭ(r, t): w_in for r <= ρ(t), w_out for ρ(t) < r <= σ(t), c2 beyond.
inline double subsolution(const FlowParams& p, const SubsolutionConfig& c, double r, double t) {
    const SubsolutionState s = subsolution_state(p, c, t);
    const double lr = std::log(r);
    switch (piece_at(s, r)) {
        case SubsolutionPiece::Inner:
            return std::exp(std::log(p.c1()) + detail::log_inner_bracket(p, c, s.log_a, lr) / p.m());
        case SubsolutionPiece::Middle:
            return std::exp(std::log(p.c1()) + s.log_b / p.m() - c.mu * lr);
        case SubsolutionPiece::Outer:
            break;
    }
    return p.c2();
}

/// A sum Σ sign_k exp(log_k) kept in log form; value() is normalized by the
/// largest magnitude so that the sign test is scale-free.
struct SignedTerms {
    std::vector<double> signs;
    std::vector<double> logs;

    void add(double sign, double log_mag) {
        if (sign == 0.0 || std::isinf(log_mag)) return;
        signs.push_back(sign);
        logs.push_back(log_mag);
    }
    double log_scale() const {
        return logs.empty() ? -std::numeric_limits<double>::infinity() : *std::max_element(logs.begin(), logs.end());
    }
    double normalized() const {
        if (logs.empty()) return 0.0;
        const double ls = log_scale();
        double sum = 0.0;
        for (std::size_t k = 0; k < logs.size(); ++k) sum += signs[k] * std::exp(logs[k] - ls);
        return sum;
    }
};

inline double sign_of(double x) { return x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0); }

/// ∂t ŭ - Δ(ŭ^m) at a point off the interfaces, from closed-form derivatives of
/// the piece containing r. The result is normalized by its largest term.
inline SignedTerms subsolution_residual_terms(const FlowParams& p, const SubsolutionConfig& c, double r,
                                              double t) {
    const double m = p.m();
    const double lam = p.lambda();
    const int n = p.n();
    const double lr = std::log(r);
    const double lc1 = std::log(p.c1());
    const SubsolutionState s = subsolution_state(p, c, t);
    SignedTerms terms;
    switch (piece_at(s, r)) {
        case SubsolutionPiece::Inner: {
            // ŭ = c1 X^{1/m}, X = r^{-mλ} - a r^{-mν}, a' = a.
            const double log_x = detail::log_inner_bracket(p, c, s.log_a, lr);
            terms.add(-1.0, lc1 - std::log(m) + s.log_a + (1.0 / m - 1.0) * log_x - m * c.nu * lr);
            const double kl = m * lam * (m * lam + 2.0 - n);
            terms.add(-sign_of(kl), m * lc1 + std::log(std::abs(kl)) + (-m * lam - 2.0) * lr);
            const double kn = m * c.nu * (m * c.nu + 2.0 - n);
            terms.add(sign_of(kn), m * lc1 + std::log(std::abs(kn)) + s.log_a + (-m * c.nu - 2.0) * lr);
            break;
        }
        case SubsolutionPiece::Middle: {
            // ŭ = c1 b^{1/m} r^{-μ}, b'/b = -(μ-λ)/(λ-ν).
            const double db = -(c.mu - lam) / (lam - c.nu);
            terms.add(sign_of(db), lc1 - std::log(m) + s.log_b / m + std::log(std::abs(db)) - c.mu * lr);
            const double km = m * c.mu * (m * c.mu + 2.0 - n);
            terms.add(-sign_of(km), m * lc1 + std::log(std::abs(km)) + s.log_b + (-m * c.mu - 2.0) * lr);
            break;
        }
        case SubsolutionPiece::Outer:
            break;
    }
    return terms;
}

/// ∂r w_in^m - ∂r w_out^m at r = ρ(t) from the derivative formulas; must be < 0.
inline SignedTerms rho_jump_terms(const FlowParams& p, const SubsolutionConfig& c, double t) {
    const double m = p.m();
    const SubsolutionState s = subsolution_state(p, c, t);
    const double lr = s.log_rho;
    const double lc = m * std::log(p.c1());
    SignedTerms terms;
    terms.add(-1.0, lc + std::log(m * p.lambda()) + (-m * p.lambda() - 1.0) * lr);
    terms.add(+1.0, lc + std::log(m * c.nu) + s.log_a + (-m * c.nu - 1.0) * lr);
    terms.add(+1.0, lc + std::log(m * c.mu) + s.log_b + (-m * c.mu - 1.0) * lr);
    return terms;
}

/// Factored form of the same jump: -c1^m m ρ^{-mλ-1} (μ-ν)(δ - (μ-λ)/(μ-ν)).
inline double rho_jump_factored(const FlowParams& p, const SubsolutionConfig& c, double t) {
    const double m = p.m();
    const SubsolutionState s = subsolution_state(p, c, t);
    return -std::pow(p.c1(), m) * m * std::exp((-m * p.lambda() - 1.0) * s.log_rho) * (c.mu - c.nu) *
           (c.delta - ConstantWindows::delta_lo(p, c.nu, c.mu));
}

/// ∂r w_out^m at r = σ(t); must be < 0 = ∂r c2^m.
inline double sigma_slope(const FlowParams& p, const SubsolutionConfig& c, double t) {
    const double m = p.m();
    const SubsolutionState s = subsolution_state(p, c, t);
    return -std::pow(p.c1(), m) * m * c.mu * std::exp(s.log_b + (-m * c.mu - 1.0) * s.log_sigma);
}

struct SubsolutionSampling {
    std::size_t times = 64;
    double t_end = 10.0;
    std::size_t points_per_piece = 24;
    /// Decades sampled below ρ(t) and above σ(t).
    double decades = 6.0;
    /// Relative exclusion band around each interface.
    double interface_margin = 1e-3;
    double residual_tolerance = 1e-8;
    /// Initial ordering ŭ(·,0) <= u0 is checked with this relative slack.
    double order_tolerance = 1e-12;
};

struct SubsolutionRow {
    std::string kind;  // residual_in | residual_mid | residual_out | match_rho | match_sigma | init_order
    double r;
    double t;
    double quantity;
    double bound;
    bool pass;
};

struct SubsolutionReport {
    std::vector<SubsolutionRow> rows;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const SubsolutionRow& r) { return r.pass; });
    }
    std::size_t failures() const {
        return static_cast<std::size_t>(
            std::count_if(rows.begin(), rows.end(), [](const SubsolutionRow& r) { return !r.pass; }));
    }
    double worst(const std::string& kind) const {
        double w = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (r.kind == kind) w = std::max(w, r.quantity);
        return w;
    }
};

/// Samples the residual sign in each smooth piece and the two interface
/// matching conditions; residual quantities are normalized by their largest
/// term, jump quantities by the magnitude of the factored form.
inline SubsolutionReport verify_subsolution(const FlowParams& p, const SubsolutionConfig& c,
                                            const SubsolutionSampling& sampling = {}) {
    validate_config(p, c);
    SubsolutionReport rep;
    const double tol = sampling.residual_tolerance;
    const double ln10 = std::log(10.0);
    const std::size_t nt = std::max<std::size_t>(sampling.times, 1);
    const std::size_t np = std::max<std::size_t>(sampling.points_per_piece, 2);

    auto residual_row = [&](const char* kind, double r, double t) {
        const double q = subsolution_residual_terms(p, c, r, t).normalized();
        rep.rows.push_back({kind, r, t, q, tol, q <= tol});
    };

    for (std::size_t k = 0; k < nt; ++k) {
        const double t = nt == 1 ? 0.0 : sampling.t_end * static_cast<double>(k) / static_cast<double>(nt - 1);
        const SubsolutionState s = subsolution_state(p, c, t);
        const double lm = std::log1p(sampling.interface_margin);
        // (0, ρ): decades below ρ down to the margin.
        for (std::size_t j = 0; j < np; ++j) {
            const double f = static_cast<double>(j) / static_cast<double>(np - 1);
            residual_row("residual_in", std::exp(s.log_rho - lm - (1.0 - f) * sampling.decades * ln10), t);
        }
        const double mid_hi = p.c2() > 0 ? s.log_sigma - lm : s.log_rho + lm + sampling.decades * ln10;
        if (mid_hi > s.log_rho + lm) {
            for (std::size_t j = 0; j < np; ++j) {
                const double f = static_cast<double>(j) / static_cast<double>(np - 1);
                residual_row("residual_mid", std::exp(s.log_rho + lm + f * (mid_hi - s.log_rho - lm)), t);
            }
        }
        if (p.c2() > 0) {
            for (std::size_t j = 0; j < np; ++j) {
                const double f = static_cast<double>(j) / static_cast<double>(np - 1);
                residual_row("residual_out", std::exp(s.log_sigma + lm + f * sampling.decades * ln10), t);
            }
        }

        const SignedTerms jump = rho_jump_terms(p, c, t);
        const double jq = jump.normalized();
        rep.rows.push_back({"match_rho", s.rho(), t, jq, 0.0, jq < 0.0});
        if (p.c2() > 0) {
            const double sl = sigma_slope(p, c, t);
            rep.rows.push_back({"match_sigma", s.sigma(), t, sign_of(sl), 0.0, sl < 0.0});
        }
    }

    // ŭ(·, 0) <= u0 across all three pieces.
    const SubsolutionState s0 = subsolution_state(p, c, 0.0);
    const double lo = s0.log_rho - sampling.decades * ln10;
    const double hi = (p.c2() > 0 ? s0.log_sigma : s0.log_rho) + sampling.decades * ln10;
    const std::size_t ni = 4 * np;
    for (std::size_t j = 0; j < ni; ++j) {
        const double r = std::exp(lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(ni - 1));
        const double u0 = initial_profile(p, r);
        const double q = (subsolution(p, c, r, 0.0) - u0) / u0;
        rep.rows.push_back({"init_order", r, 0.0, q, sampling.order_tolerance, q <= sampling.order_tolerance});
    }
    return rep;
}

struct SandwichRow {
    double t;
    /// max over nodes of (ŭ - u)/ū, and (u - ū)/ū.
    double lower_violation;
    double upper_violation;
    double tolerance;
    bool pass;
};

/// ŭ - tol·ū <= u <= ū(1 + tol) at every stored node and time.
inline std::vector<SandwichRow> sandwich_check(const Trajectory& tr, const SubsolutionConfig& c,
                                               double tolerance = 1e-6) {
    std::vector<SandwichRow> rows;
    const RadialGrid& g = *tr.grid;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        double lower = -std::numeric_limits<double>::infinity();
        double upper = -std::numeric_limits<double>::infinity();
        const double t = tr.times[k];
        for (std::size_t i = g.first_positive(); i < g.size(); ++i) {
            const double r = g[i];
            const double over = supersolution(tr.params, r, t);
            const double under = subsolution(tr.params, c, r, t);
            const double u = tr.fields[k][i];
            lower = std::max(lower, (under - u) / over);
            upper = std::max(upper, (u - over) / over);
        }
        rows.push_back({t, lower, upper, tolerance, lower <= tolerance && upper <= tolerance});
    }
    return rows;
}

}  // namespace fastdiff
