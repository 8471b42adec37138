#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastdiff/grid.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/tridiagonal.hpp"

namespace fastdiff {

class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
    double time() const { return time_; }

private:
    double time_;
};

/// Newton residual stayed above tolerance after the step was cut to dt0·2⁻²⁰.
class NewtonDivergence : public SolverError {
public:
    using SolverError::SolverError;
};

/// A Newton iterate could not be kept positive by halving the update.
class PositivityLoss : public SolverError {
public:
    using SolverError::SolverError;
};

struct SolverConfig {
    double dt0 = 1e-4;
    double t_end = 10.0;
    /// 1 = backward Euler, 1/2 = Crank-Nicolson.
    double theta = 1.0;
    /// Max over free nodes of |residual_i| divided by the magnitude of the
    /// terms forming it (a normwise backward error of the nonlinear system).
    double newton_tol = 1e-12;
    int newton_max = 30;
    double step_growth = 1.2;
    /// Largest step; <= 0 means t_end/64.
    double dt_max = 0.0;
    /// Growth is allowed only when Newton converged within this many iterations.
    int fast_iterations = 4;
    /// Smallest dt, as a fraction of dt0, before NewtonDivergence is raised.
    double min_dt_fraction = 0x1p-20;

    double max_step() const { return dt_max > 0.0 ? dt_max : t_end / 64.0; }

    void validate() const {
        if (!(dt0 > 0.0)) throw ParameterError("solver requires dt0 > 0");
        if (!(t_end > 0.0)) throw ParameterError("solver requires t_end > 0");
        if (!(newton_tol > 0.0)) throw ParameterError("solver requires newton_tol > 0");
        if (!(theta >= 0.5 && theta <= 1.0)) throw ParameterError("solver requires theta in [1/2, 1]");
        if (newton_max < 1) throw ParameterError("solver requires newton_max >= 1");
        if (!(step_growth >= 1.0)) throw ParameterError("solver requires step_growth >= 1");
    }

    /// Constant step dt over [0, t_end].
    static SolverConfig fixed_step(double dt, double t_end, double theta = 1.0) {
        SolverConfig c;
        c.dt0 = dt;
        c.dt_max = dt;
        c.t_end = t_end;
        c.theta = theta;
        c.step_growth = 1.0;
        return c;
    }
};

enum class BoundaryKind {
    /// Dirichlet u(r_min) = u0(r_min), u(r_max) = u0(r_max).
    PinnedInitial,
    /// r = 0 is a node with zero radial derivative; Dirichlet at r_max.
    OriginSymmetric,
};

inline const char* to_string(BoundaryKind k) {
    return k == BoundaryKind::PinnedInitial ? "pinned-initial" : "origin-symmetric";
}

struct BoundaryCondition {
    BoundaryKind kind = BoundaryKind::PinnedInitial;
    double inner = 0.0;  // unused for OriginSymmetric
    double outer = 0.0;

    std::size_t first_free() const { return kind == BoundaryKind::PinnedInitial ? 1 : 0; }
};

/// Time-stamped fields produced by the solver; fields[0] is the sampled initial profile.
struct Trajectory {
    FlowParams params;
    GridPtr grid;
    BoundaryCondition bc;
    std::vector<double> times;
    std::vector<std::vector<double>> fields;
    std::optional<double> epsilon;

    std::size_t size() const { return times.size(); }
    RadialField field(std::size_t k) const { return {grid, fields.at(k), times.at(k)}; }
};

struct StepStats {
    int iterations = 0;
    double residual = 0.0;
    bool converged = false;
    bool positivity_lost = false;
};

namespace detail {

/// One θ-step attempt at fixed dt. Returns the new values in `u` (left
/// unchanged on failure) and the Newton statistics.
inline StepStats newton_step(std::span<const Stencil3> rows, std::vector<double>& u, double dt,
                             const SolverConfig& cfg, double m, const BoundaryCondition& bc) {
    const std::size_t n = u.size();
    const std::size_t first = bc.first_free();
    const std::size_t last = n - 2;
    const std::size_t nf = last - first + 1;

    const std::vector<double> u_old = u;
    std::vector<double> phi(n), dphi(n);
    auto refresh = [&](std::span<const double> v) {
        for (std::size_t i = 0; i < n; ++i) {
            phi[i] = std::pow(v[i], m);
            dphi[i] = m * phi[i] / v[i];
        }
    };

    std::vector<double> explicit_part(n, 0.0);
    if (cfg.theta < 1.0) {
        refresh(u_old);
        for (std::size_t i = first; i <= last; ++i) {
            explicit_part[i] = (1.0 - cfg.theta) * dt * (i == 0 ? rows[0].di * phi[0] + rows[0].up * phi[1]
                                                                 : rows[i].apply(phi, i));
        }
    }

    std::vector<double> trial = u_old;
    std::vector<double> res(nf), lo(nf), di(nf), up(nf);

    auto residual = [&](std::span<const double> v) {
        refresh(v);
        double worst = 0.0;
        for (std::size_t i = first; i <= last; ++i) {
            const Stencil3& row = rows[i];
            const double lphi = i == 0 ? row.di * phi[0] + row.up * phi[1] : row.apply(phi, i);
            const double f = v[i] - u_old[i] - cfg.theta * dt * lphi - explicit_part[i];
            const double lmag = (i == 0 ? 0.0 : std::abs(row.lo) * phi[i - 1]) + std::abs(row.di) * phi[i] +
                                std::abs(row.up) * phi[i + 1];
            const double scale = v[i] + u_old[i] + cfg.theta * dt * lmag + std::abs(explicit_part[i]);
            res[i - first] = f;
            worst = std::max(worst, std::abs(f) / scale);
        }
        return worst;
    };

    StepStats stats;
    stats.residual = residual(trial);
    for (int it = 0; it < cfg.newton_max; ++it) {
        if (stats.residual <= cfg.newton_tol) {
            stats.converged = true;
            break;
        }
        // J = I - θ dt L diag(φ'(u)); phi/dphi are current from residual().
        for (std::size_t i = first; i <= last; ++i) {
            const std::size_t k = i - first;
            const Stencil3& row = rows[i];
            di[k] = 1.0 - cfg.theta * dt * row.di * dphi[i];
            lo[k] = (i > first) ? -cfg.theta * dt * row.lo * dphi[i - 1] : 0.0;
            up[k] = (i < last) ? -cfg.theta * dt * row.up * dphi[i + 1] : 0.0;
            res[k] = -res[k];
        }
        const std::vector<double> delta = solve_tridiagonal(lo, di, up, res);

        double alpha = 1.0;
        std::vector<double> next = trial;
        bool positive = false;
        for (int halving = 0; halving < 60; ++halving) {
            positive = true;
            for (std::size_t i = first; i <= last; ++i) {
                next[i] = trial[i] + alpha * delta[i - first];
                if (!(next[i] > 0.0)) {
                    positive = false;
                    break;
                }
            }
            if (positive) break;
            alpha *= 0.5;
        }
        ++stats.iterations;
        if (!positive) {
            stats.positivity_lost = true;
            return stats;
        }
        trial.swap(next);
        stats.residual = residual(trial);
    }
    if (!stats.converged && stats.residual <= cfg.newton_tol) stats.converged = true;
    if (stats.converged) u.swap(trial);
    return stats;
}

inline void apply_boundary(std::vector<double>& u, const BoundaryCondition& bc) {
    if (bc.kind == BoundaryKind::PinnedInitial) u.front() = bc.inner;
    u.back() = bc.outer;
}

}  // namespace detail

/// Advances u by dt with the θ-scheme
///   u_new - u - dt [θ L(u_new^m) + (1-θ) L(u^m)] = 0,
/// solved by Newton with a tridiagonal Jacobian. A failed attempt is retried as
/// two half steps, recursively, down to cfg.dt0 · cfg.min_dt_fraction.
inline RadialField step(const RadialField& u, double dt, const SolverConfig& cfg, const FlowParams& p,
                        const BoundaryCondition& bc, StepStats* stats = nullptr) {
    cfg.validate();
    if (!(dt > 0.0)) throw ParameterError("step requires dt > 0");
    if (!is_positive(u.values)) throw PositivityLoss("step received a non-positive field", u.time);
    const auto rows = laplacian_rows(*u.grid, p.n());
    const double dt_floor = cfg.dt0 * cfg.min_dt_fraction;

    std::vector<double> values = u.values;
    detail::apply_boundary(values, bc);
    StepStats last{};

    auto advance = [&](auto&& self, double t0, double h) -> void {
        StepStats s = detail::newton_step(rows, values, h, cfg, p.m(), bc);
        last = s;
        if (s.converged) return;
        if (h * 0.5 < dt_floor) {
            if (s.positivity_lost) throw PositivityLoss("Newton iterate lost positivity", t0);
            throw NewtonDivergence("Newton did not converge (residual " + std::to_string(s.residual) + ")", t0);
        }
        self(self, t0, 0.5 * h);
        self(self, t0 + 0.5 * h, 0.5 * h);
    };
    advance(advance, u.time, dt);
    if (stats) *stats = last;
    return {u.grid, std::move(values), u.time + dt};
}

namespace detail {

inline Trajectory integrate(Trajectory tr, const SolverConfig& cfg) {
    cfg.validate();
    const auto rows = laplacian_rows(*tr.grid, tr.params.n());
    const double dt_floor = cfg.dt0 * cfg.min_dt_fraction;
    const double dt_cap = cfg.max_step();

    std::vector<double> u = tr.fields.front();
    double t = 0.0;
    double dt = std::min(cfg.dt0, dt_cap);
    const bool constant = tr.params.is_degenerate();
    std::size_t steps = 0;

    while (t < cfg.t_end * (1.0 - 1e-14)) {
        double h = std::min(dt, dt_cap);
        if (t + h > cfg.t_end || cfg.t_end - (t + h) < 1e-9 * h) h = cfg.t_end - t;

        StepStats s;
        if (constant) {
            s.converged = true;
        } else {
            s = newton_step(rows, u, h, cfg, tr.params.m(), tr.bc);
        }
        if (!s.converged) {
            dt = 0.5 * h;
            if (dt < dt_floor) {
                if (s.positivity_lost) throw PositivityLoss("Newton iterate lost positivity", t);
                throw NewtonDivergence("Newton did not converge (residual " + std::to_string(s.residual) +
                                           ")",
                                       t);
            }
            continue;
        }
        ++steps;
        t = (cfg.step_growth == 1.0 && h == cfg.dt0) ? static_cast<double>(steps) * h : t + h;
        if (cfg.t_end - t < 1e-12 * cfg.t_end) t = cfg.t_end;
        tr.times.push_back(t);
        tr.fields.push_back(u);
        dt = (s.iterations <= cfg.fast_iterations) ? h * cfg.step_growth : h;
    }
    return tr;
}

}  // namespace detail

/// Singular problem on the truncated annulus [r_min, r_max] with Dirichlet data
/// pinned at u0(r_min), u0(r_max). Every accepted step is stored.
inline Trajectory solve(const FlowParams& p, GridPtr grid, const SolverConfig& cfg) {
    if (grid->has_origin()) throw GridError("solve requires a grid without the origin");
    BoundaryCondition bc{BoundaryKind::PinnedInitial, initial_profile(p, grid->r_min()),
                         initial_profile(p, grid->r_max())};
    Trajectory tr{p, grid, bc, {0.0}, {}, std::nullopt};
    tr.fields.push_back(sample_field(grid, [&](double r) { return initial_profile(p, r); }).values);
    return detail::integrate(std::move(tr), cfg);
}

/// Regularized problem on the ball [0, r_max]: symmetric at r = 0, Dirichlet
/// u_{0,ε}(r_max) at the outer edge, initial data u_{0,ε}.
inline Trajectory solve_regularized(const FlowParams& p, const RegularizationConfig& rc, GridPtr grid,
                                    const SolverConfig& cfg) {
    if (!grid->has_origin()) throw GridError("solve_regularized requires a grid with a node at r = 0");
    BoundaryCondition bc{BoundaryKind::OriginSymmetric, 0.0, regularized_initial(p, rc, grid->r_max())};
    Trajectory tr{p, grid, bc, {0.0}, {}, rc.epsilon()};
    tr.fields.push_back(sample_field(grid, [&](double r) { return regularized_initial(p, rc, r); }).values);
    return detail::integrate(std::move(tr), cfg);
}

}  // namespace fastdiff
