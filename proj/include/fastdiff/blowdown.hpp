#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/solver.hpp"
#include "fastdiff/tridiagonal.hpp"

namespace fastdiff {

/// w^m = α + β r^{2-n}: the radial harmonic profile through two Dirichlet values.
struct HarmonicSteadyState {
    int n;
    double m;
    double alpha;
    double beta;

    static HarmonicSteadyState through(int n, double m, double ra, double ua, double rb, double ub) {
        const double pa = std::pow(ra, 2.0 - n);
        const double pb = std::pow(rb, 2.0 - n);
        const double va = std::pow(ua, m);
        const double vb = std::pow(ub, m);
        const double beta = (va - vb) / (pa - pb);
        return {n, m, vb - beta * pb, beta};
    }

    /// Steady state of the pinned-initial truncation on [ra, rb].
    static HarmonicSteadyState for_truncation(const FlowParams& p, double ra, double rb) {
        return through(p.n(), p.m(), ra, initial_profile(p, ra), rb, initial_profile(p, rb));
    }

    double operator()(double r) const { return std::pow(alpha + beta * std::pow(r, 2.0 - n), 1.0 / m); }
};

/// Discrete steady state of the truncated scheme: L(v) = 0 with v = u^m pinned
/// at both ends; returns u = v^{1/m} at every node.
inline std::vector<double> discrete_steady_state(const FlowParams& p, const RadialGrid& g) {
    if (g.has_origin()) throw GridError("discrete steady state requires a grid without the origin");
    const auto rows = laplacian_rows(g, p.n());
    const std::size_t n = g.size();
    std::vector<double> lo(n, 0.0), di(n, 1.0), up(n, 0.0), rhs(n, 0.0);
    rhs.front() = initial_profile_pow_m(p, g.r_min());
    rhs.back() = initial_profile_pow_m(p, g.r_max());
    for (std::size_t i = 1; i + 1 < n; ++i) {
        lo[i] = rows[i].lo;
        di[i] = rows[i].di;
        up[i] = rows[i].up;
    }
    std::vector<double> v = solve_tridiagonal(lo, di, up, rhs);
    for (double& x : v) x = std::pow(x, 1.0 / p.m());
    return v;
}

struct BlowdownRow {
    double t;
    double max_dev;       // max |u - c2|
    double max_grad;      // max |∂r u|
    double max_curv;      // max |∂r² u|
    double steady_dev;    // max |u - w| / w
};

/// Window metrics per stored time on [ra, rb], with w the harmonic steady
/// state through the trajectory's boundary values.
inline std::vector<BlowdownRow> blowdown_diagnostics(const Trajectory& tr, double ra, double rb) {
    const RadialGrid& g = *tr.grid;
    const IndexWindow w = g.window(ra, rb);
    if (w.first == 0 || w.last + 1 >= g.size()) throw GridError("blow-down window must avoid the boundary nodes");
    const FlowParams& p = tr.params;
    const HarmonicSteadyState steady =
        HarmonicSteadyState::through(p.n(), p.m(), g.r_min(), tr.fields[0].front(), g.r_max(), tr.fields[0].back());

    std::vector<BlowdownRow> out;
    out.reserve(tr.size());
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const std::vector<double>& u = tr.fields[k];
        const std::vector<double> du = radial_gradient(g, u);
        const std::vector<double> d2u = radial_second_derivative(g, u);
        BlowdownRow row{tr.times[k], 0.0, 0.0, 0.0, 0.0};
        for (std::size_t i = w.first; i <= w.last; ++i) {
            const double ws = steady(g[i]);
            row.max_dev = std::max(row.max_dev, std::abs(u[i] - p.c2()));
            row.max_grad = std::max(row.max_grad, std::abs(du[i - 1]));
            row.max_curv = std::max(row.max_curv, std::abs(d2u[i - 1]));
            row.steady_dev = std::max(row.steady_dev, std::abs(u[i] - ws) / ws);
        }
        out.push_back(row);
    }
    return out;
}

/// True when `values` never increases by more than rel_tol relative to its previous entry.
inline bool nonincreasing_sequence(const std::vector<double>& values, double rel_tol = kMonotoneTolerance) {
    for (std::size_t k = 1; k < values.size(); ++k) {
        if (values[k] > values[k - 1] * (1.0 + rel_tol)) return false;
    }
    return true;
}

}  // namespace fastdiff
