#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "fastdiff/grid.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

struct ClauseTolerances {
    double radial = 1e-8;    // (i)   relative increment in r
    double time = 1e-8;      // (ii)  relative increment in t
    double inner = 0.02;     // (iii) |r^λ u - c1| / c1
    double gradient = 0.05;  // (iv)  |r^{λ+1} u_r + c1 λ| / (c1 λ)
    double outer = 0.02;     // (v)   |u - c2| / c2
    std::size_t boundary_skip = 5;
};

struct ClauseRow {
    double t;
    std::string clause;  // i | ii | iii | iv | v
    double metric;
    double tolerance;
    bool pass;
};

struct ClauseReport {
    std::vector<ClauseRow> rows;

    bool all_pass() const {
        return std::all_of(rows.begin(), rows.end(), [](const ClauseRow& r) { return r.pass; });
    }
    bool clause_pass(const std::string& c) const {
        return std::all_of(rows.begin(), rows.end(), [&](const ClauseRow& r) { return r.clause != c || r.pass; });
    }
    double worst(const std::string& c) const {
        double w = -std::numeric_limits<double>::infinity();
        for (const auto& r : rows)
            if (r.clause == c) w = std::max(w, r.metric);
        return w;
    }
    std::vector<std::string> failing_clauses() const {
        std::vector<std::string> out;
        for (const char* c : {"i", "ii", "iii", "iv", "v"})
            if (!clause_pass(c)) out.emplace_back(c);
        return out;
    }
};

/// max_i (f_{i+1} - f_i)/f_i: largest relative increase between neighbours.
inline double max_relative_increase(std::span<const double> f) {
    double w = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < f.size(); ++i) w = std::max(w, (f[i + 1] - f[i]) / f[i]);
    return w;
}

/// Per stored time: (i) radial and (ii) temporal monotonicity, (iii)/(iv) the
/// inner profile r^{-λ} and its slope on the innermost decade, (v) the outer
/// level on the outermost decade. Clause (v) is skipped when c2 = 0 and clauses
/// (iii)/(iv) when c1 = 0.
inline ClauseReport verify_theorem_clauses(const Trajectory& tr, const ClauseTolerances& tol = {}) {
    const RadialGrid& g = *tr.grid;
    const FlowParams& p = tr.params;
    const double lam = p.lambda();
    const IndexWindow inner = g.inner_decade(tol.boundary_skip);
    const IndexWindow outer = g.outer_decade(tol.boundary_skip);
    const std::size_t fp = g.first_positive();
    ClauseReport rep;

    for (std::size_t k = 0; k < tr.size(); ++k) {
        const double t = tr.times[k];
        const std::vector<double>& u = tr.fields[k];
        const std::span<const double> pos(u.data() + fp, u.size() - fp);

        const double m1 = max_relative_increase(pos);
        rep.rows.push_back({t, "i", m1, tol.radial, m1 <= tol.radial});

        if (k > 0) {
            const std::vector<double>& prev = tr.fields[k - 1];
            double m2 = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < u.size(); ++i) m2 = std::max(m2, (u[i] - prev[i]) / prev[i]);
            rep.rows.push_back({t, "ii", m2, tol.time, m2 <= tol.time});
        }

        if (!p.is_degenerate() && inner.first <= inner.last) {
            const std::vector<double> du = radial_gradient(g, u);
            double m3 = 0.0;
            double m4 = 0.0;
            for (std::size_t i = inner.first; i <= inner.last; ++i) {
                const double r = g[i];
                m3 = std::max(m3, std::abs(std::pow(r, lam) * u[i] - p.c1()) / p.c1());
                m4 = std::max(m4, std::abs(std::pow(r, lam + 1.0) * du[i - 1] + p.c1() * lam) / (p.c1() * lam));
            }
            rep.rows.push_back({t, "iii", m3, tol.inner, m3 <= tol.inner});
            rep.rows.push_back({t, "iv", m4, tol.gradient, m4 <= tol.gradient});
        }

        if (p.c2() > 0.0 && outer.first <= outer.last) {
            double m5 = 0.0;
            for (std::size_t i = outer.first; i <= outer.last; ++i) {
                m5 = std::max(m5, std::abs(u[i] - p.c2()) / p.c2());
            }
            rep.rows.push_back({t, "v", m5, tol.outer, m5 <= tol.outer});
        }
    }
    return rep;
}

}  // namespace fastdiff
