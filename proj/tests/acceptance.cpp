// Acceptance runner: `acceptance <criterion>` prints one PASS/FAIL line per
// check and exits nonzero if any check fails. `acceptance all` runs everything.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "fastdiff/blowdown.hpp"
#include "fastdiff/clauses.hpp"
#include "fastdiff/comparison.hpp"
#include "fastdiff/geometry.hpp"
#include "fastdiff/solver.hpp"

using namespace fastdiff;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
    std::printf("%s %s: %s\n", pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!pass) ++g_failures;
}

void info(const std::string& name, const std::string& detail) {
    std::printf("INFO %s: %s\n", name.c_str(), detail.c_str());
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

std::string fmt(const char* f, double a, double b) {
    char buf[160];
    std::snprintf(buf, sizeof buf, f, a, b);
    return buf;
}

FlowParams reference() { return FlowParams(5, 3.0 / 7.0, 4.0, 1.0, 1.0); }
FlowParams geometry_setup() { return FlowParams(6, 0.5, 6.0, 1.0, 1.0); }

GridPtr reference_grid() { return make_grid(RadialGrid::geometric(1e-3, 1e3, 2048)); }

SolverConfig reference_solver(double t_end = 10.0) {
    SolverConfig c;
    c.t_end = t_end;
    return c;
}

RadialField initial_field(const FlowParams& p, GridPtr g) {
    return sample_field(g, [&](double r) { return initial_profile(p, r); });
}

std::size_t time_index(const Trajectory& tr, double t) {
    for (std::size_t k = 0; k < tr.size(); ++k)
        if (tr.times[k] == t) return k;
    throw std::runtime_error("time " + detail::fmt_num(t) + " not stored");
}

// ---- sandwich ------------------------------------------------------------

void sandwich() {
    const FlowParams p = reference();
    const Trajectory tr = solve(p, reference_grid(), reference_solver());
    const SubsolutionConfig c = pick_admissible_config(p);
    info("sandwich.constants", "nu=" + detail::fmt_num(c.nu) + " mu=" + detail::fmt_num(c.mu) + " delta=" + detail::fmt_num(c.delta) +
                                   " A=" + detail::fmt_num(c.A));

    const auto rows = sandwich_check(tr, c, 1e-6);
    double lo = -INFINITY, hi = -INFINITY;
    bool ok = true;
    for (const auto& r : rows) {
        lo = std::max(lo, r.lower_violation);
        hi = std::max(hi, r.upper_violation);
        ok = ok && r.pass;
    }
    report("sandwich.bounds", ok,
           fmt("max (sub-u)/super = %.3e, max (u-super)/super = %.3e", lo, hi) + " over " +
               std::to_string(rows.size()) + " times, tol 1e-6");

    SubsolutionSampling s;
    s.t_end = 10.0;
    const SubsolutionReport rep = verify_subsolution(p, c, s);
    const double res = std::max({rep.worst("residual_in"), rep.worst("residual_mid"), rep.worst("residual_out")});
    bool res_ok = true, rho_ok = true, sigma_ok = true;
    std::size_t n_rho = 0, n_sigma = 0;
    for (const auto& r : rep.rows) {
        if (r.kind.rfind("residual", 0) == 0) res_ok = res_ok && r.pass;
        if (r.kind == "match_rho") rho_ok = rho_ok && r.pass, ++n_rho;
        if (r.kind == "match_sigma") sigma_ok = sigma_ok && r.pass, ++n_sigma;
    }
    report("sandwich.sub_residual", res_ok, fmt("max normalized residual %.3e (tol 1e-8)", res));
    report("sandwich.interface_rho", rho_ok && n_rho == 64,
           std::to_string(n_rho) + " times, worst normalized jump " + fmt("%.3e", rep.worst("match_rho")));
    report("sandwich.interface_sigma", sigma_ok && n_sigma == 64,
           std::to_string(n_sigma) + " times, worst slope sign " + fmt("%.0f", rep.worst("match_sigma")));
}

// ---- clauses ---------------------------------------------------------------

void clauses() {
    const FlowParams p = reference();
    const Trajectory tr = solve(p, reference_grid(), reference_solver());
    const ClauseTolerances tol;
    const ClauseReport rep = verify_theorem_clauses(tr, tol);
    const std::map<std::string, double> tols{
        {"i", tol.radial}, {"ii", tol.time}, {"iii", tol.inner}, {"iv", tol.gradient}, {"v", tol.outer}};
    for (const char* c : {"i", "ii", "iii", "iv", "v"}) {
        report(std::string("clauses.") + c, rep.clause_pass(c),
               fmt("worst %.4e, tol %.1e", rep.worst(c), tols.at(c)));
    }
}

// ---- blow-down -------------------------------------------------------------

void blowdown() {
    const FlowParams p = reference();
    const Trajectory tr = solve(p, reference_grid(), reference_solver(1000.0));
    const auto rows = blowdown_diagnostics(tr, 0.5, 2.0);
    std::vector<double> dev;
    for (const auto& r : rows) dev.push_back(r.max_dev);
    report("blowdown.monotone_window", nonincreasing_sequence(dev),
           fmt("max|u-c2| on [0.5,2] from %.4e to %.4e", dev.front(), dev.back()) + " over " +
               std::to_string(dev.size()) + " times");
    report("blowdown.steady_state", rows.back().steady_dev <= 0.01,
           fmt("t=%g: max |u/w - 1| = %.4e (tol 1e-2)", tr.times.back(), rows.back().steady_dev));

    // Window deviation of the steady state as r_min halves, at fixed log spacing.
    const double q = std::log(1e6) / 2047.0;
    std::vector<double> d;
    for (double rmin : {1e-3, 5e-4, 2.5e-4}) {
        const auto N = static_cast<std::size_t>(std::ceil(std::log(1e3 / rmin) / q)) + 1;
        const RadialGrid g = RadialGrid::geometric(rmin, 1e3, N);
        const auto w = discrete_steady_state(p, g);
        const IndexWindow win = g.window(0.5, 2.0);
        double m = 0.0;
        for (std::size_t i = win.first; i <= win.last; ++i) m = std::max(m, std::abs(w[i] - p.c2()));
        d.push_back(m);
    }
    const double expect = p.n() - 2 - p.m() * p.lambda();
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
        const double e = std::log2(d[k] / d[k + 1]);
        report("blowdown.rmin_exponent_" + std::to_string(k + 1), d[k + 1] < d[k] && std::abs(e / expect - 1) <= 0.25,
               fmt("observed %.4f, expected %.4f (tol 25%%)", e, expect));
    }
}

// ---- uniqueness stand-in ---------------------------------------------------

void uniqueness() {
    const FlowParams p = reference();
    GridPtr g1 = make_grid(RadialGrid::geometric(1e-3, 1e3, 2049));
    GridPtr g2 = make_grid(g1->refined());
    GridPtr g4 = make_grid(g2->refined());
    const double dt = 1.0 / 64;
    const Trajectory a = solve(p, g1, SolverConfig::fixed_step(dt, 1.0));
    const Trajectory b = solve(p, g2, SolverConfig::fixed_step(dt / 2, 1.0));
    const Trajectory c = solve(p, g4, SolverConfig::fixed_step(dt / 4, 1.0));

    double e12 = 0.0, e24 = 0.0;
    for (std::size_t k = 1; k < a.size(); ++k) {
        const auto& ua = a.fields[k];
        const auto& ub = b.fields[2 * k];
        const auto& uc = c.fields[4 * k];
        for (std::size_t i = 0; i < ua.size(); ++i) {
            e12 = std::max(e12, std::abs(ua[i] - ub[2 * i]) / ua[i]);
            e24 = std::max(e24, std::abs(ub[2 * i] - uc[4 * i]) / ua[i]);
        }
    }
    const double order = std::log2(e12 / e24);
    double err = 0.0;
    for (std::size_t k = 1; k < a.size(); ++k) {
        const auto& ua = a.fields[k];
        const auto& ub = b.fields[2 * k];
        const auto& uc = c.fields[4 * k];
        for (std::size_t i = 0; i < ua.size(); ++i) {
            const double star = uc[4 * i] + (uc[4 * i] - ub[2 * i]) / (std::pow(2.0, order) - 1.0);
            err = std::max(err, std::abs(ua[i] - star) / ua[i]);
        }
    }
    info("uniqueness.observed_order", fmt("%.3f", order));
    report("uniqueness.richardson", std::isfinite(order) && order > 0 && e12 <= 3.0 * err,
           fmt("max |u_N - u_2N|/u = %.3e, Richardson error of u_N = %.3e", e12, err));

    // Regularized family on a grid through the origin.
    GridPtr go = make_grid(RadialGrid::with_origin(1e-3, 1e3, 2049));
    std::vector<Trajectory> fam;
    for (double eps : {0.1, 0.05, 0.025})
        fam.push_back(solve_regularized(p, RegularizationConfig(eps), go, SolverConfig::fixed_step(1.0 / 64, 10.0)));
    double worst = INFINITY;
    for (double r : {2.0, 5.0, 10.0}) {
        const auto it = std::lower_bound(go->nodes().begin(), go->nodes().end(), r);
        const auto i = static_cast<std::size_t>(it - go->nodes().begin());
        for (double t : {0.25, 1.0, 2.5, 10.0}) {
            const std::size_t k = time_index(fam[0], t);
            const double d1 = std::abs(fam[0].fields[k][i] - fam[1].fields[k][i]);
            const double d2 = std::abs(fam[1].fields[k][i] - fam[2].fields[k][i]);
            worst = std::min(worst, d1 / d2);
        }
    }
    report("uniqueness.epsilon_cauchy", worst >= 1.5,
           fmt("min ratio |u_0.1-u_0.05|/|u_0.05-u_0.025| = %.3f over 12 probes (need >= %.1f)", worst, 1.5));
}

// ---- geometry at t = 0 -------------------------------------------------------

/// Closed form taken at face value: -(4(n-1)/(n-2)) c1^m (mλ)² r^{-mλ-2} / u0.
double stated_curvature(const FlowParams& p, double r) {
    const int n = p.n();
    const double ml = p.m() * p.lambda();
    return -4.0 * (n - 1) / (n - 2.0) * std::pow(p.c1(), p.m()) * ml * ml * std::pow(r, -ml - 2.0) /
           initial_profile(p, r);
}

double curvature_order(const FlowParams& p, const std::function<double(double)>& exact, double* last) {
    std::vector<double> err;
    for (std::size_t N : {1025u, 2049u, 4097u}) {
        GridPtr g = make_grid(RadialGrid::geometric(1e-4, 1e4, N));
        const auto scal = scalar_curvature(initial_field(p, g), p);
        const IndexWindow w = g->window(1e-3, 10.0);
        double e = 0.0;
        for (std::size_t i = w.first; i <= w.last; ++i)
            e = std::max(e, std::abs(scal[i - 1] - exact((*g)[i])) / std::abs(exact((*g)[i])));
        err.push_back(e);
    }
    *last = err.back();
    return std::min(std::log2(err[0] / err[1]), std::log2(err[1] / err[2]));
}

void geometry() {
    const FlowParams p = geometry_setup();
    double e_stated = 0, e_true = 0;
    const double o_stated = curvature_order(p, [&](double r) { return stated_curvature(p, r); }, &e_stated);
    report("geometry.curvature_closed_form", o_stated >= 1.8,
           fmt("observed order %.3f, finest rel. error %.3e against -(4(n-1)/(n-2)) c1^m (m lambda)^2 r^(-m lambda-2)/u0",
               o_stated, e_stated));
    const double o_true =
        curvature_order(p, [&](double r) { return scalar_curvature_initial(p, r); }, &e_true);
    info("geometry.curvature_derived_form",
         fmt("order %.3f, finest rel. error %.3e against +(4(n-1)/(n-2)) c1^m m lambda (n-2-m lambda) r^(-m lambda-2)/u0",
             o_true, e_true));

    GridPtr g = make_grid(RadialGrid::geometric(1e-4, 1e4, 4097));
    const RadialField u0 = initial_field(p, g);
    const GeometryProfile gp = geometry_profile(u0, p);
    const double smax = *std::max_element(gp.scal.begin(), gp.scal.end());
    const double smin = *std::min_element(gp.scal.begin(), gp.scal.end());
    report("geometry.scal_negative", smax < 0.0, fmt("scal ranges over [%.3e, %.3e]", smin, smax));

    const EndFit e2 = fit_end_asymptotics(gp, EndId::E2, p);
    report("geometry.e2_slope", std::abs(e2.slope / 0.5 - 1) <= 0.01, fmt("sqrt(B) fit %.6f, ref %.6f", e2.slope, 0.5));
    report("geometry.e2_tau", e2.order_fitted && std::abs(e2.order / 4.0 - 1) <= 0.15,
           fmt("tau fit %.4f, ref %.4f (tol 15%%)", e2.order, 4.0));
    const EndFit e1 = fit_end_asymptotics(gp, EndId::E1, p);
    report("geometry.e1_order", e1.order_fitted && std::abs(e1.order / 1.0 - 1) <= 0.15,
           fmt("order fit %.4f, ref %.4f (tol 15%%)", e1.order, 1.0));
}

// ---- flow and limits -------------------------------------------------------

void flow() {
    const FlowParams p = geometry_setup();
    std::vector<double> res;
    for (auto [N, dt] : {std::pair{1025u, 1.0 / 16}, std::pair{2049u, 1.0 / 32}, std::pair{4097u, 1.0 / 64}}) {
        GridPtr g = make_grid(RadialGrid::geometric(1e-4, 1e4, N));
        const Trajectory tr = solve(p, g, SolverConfig::fixed_step(dt, 1.0));
        double m = 0.0;
        for (const auto& r : yamabe_flow_residual(tr)) m = std::max(m, r.max_rel);
        res.push_back(m);
    }
    const double o1 = std::log2(res[0] / res[1]), o2 = std::log2(res[1] / res[2]);
    report("flow.residual_order", std::min(o1, o2) >= 0.8,
           fmt("max |R|/u: %.3e -> ", res[0], res[1]) + fmt("%.3e -> %.3e", res[1], res[2]) +
               fmt(", orders %.3f, %.3f", o1, o2));

    GridPtr g = make_grid(RadialGrid::geometric(1e-4, 1e4, 4097));
    const Trajectory tr = solve(p, g, reference_solver(1.0));
    bool complete = true;
    double vol = 0.0;
    std::string why;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        try {
            const CompletenessReport c = completeness_indicator(tr.field(k), p);
            if (!(c.inner.complete && c.outer.complete)) {
                complete = false;
                why = fmt(" (t=%g inner exponent %.3f)", tr.times[k], c.inner.exponent);
            }
        } catch (const FitUnstable& e) {
            complete = false;
            why = std::string(" (") + e.what() + ")";
        }
        const VolumeLimits v = volume_form_limits(tr.field(k), p);
        vol = std::max({vol, std::abs(v.inner / v.inner_ref - 1), std::abs(v.outer / v.outer_ref - 1)});
    }
    report("flow.complete_both_ends", complete, std::to_string(tr.size()) + " stored times" + why);

    const std::vector<double> flat(g->size(), p.c2());
    const CompletenessReport lim = completeness_indicator(*g, flat, p.n());
    report("flow.limit_inner_incomplete", !lim.inner.complete,
           fmt("constant c2 field: inner exponent %.3f, inner length %.4f", lim.inner.exponent,
               lim.inner.truncated_length));

    report("flow.volume_limits", vol <= 0.02, fmt("max relative error %.3e over all stored times (tol 2e-2)", vol));
    const double y3 = yamabe_constant_sphere(3);
    report("flow.yamabe_s3", std::abs(y3 - 43.83) <= 0.01, fmt("Y(S^3) = %.6f, ref 43.83 +- 0.01", y3));
}

}  // namespace

int main(int argc, char** argv) {
    const std::map<std::string, void (*)()> criteria{{"sandwich", sandwich}, {"clauses", clauses},
                                                      {"blowdown", blowdown}, {"uniqueness", uniqueness},
                                                      {"geometry", geometry}, {"flow", flow}};
    const std::string which = argc > 1 ? argv[1] : "all";
    try {
        if (which == "all") {
            for (const auto& [name, fn] : criteria) fn();
        } else if (auto it = criteria.find(which); it != criteria.end()) {
            it->second();
        } else {
            std::fprintf(stderr, "unknown criterion '%s'\n", which.c_str());
            return 2;
        }
    } catch (const std::exception& e) {
        report(which + ".error", false, e.what());
    }
    return g_failures == 0 ? 0 : 1;
}
