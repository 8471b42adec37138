#include <CLI11.hpp>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "fastdiff/blowdown.hpp"
#include "fastdiff/clauses.hpp"
#include "fastdiff/comparison.hpp"
#include "fastdiff/config.hpp"
#include "fastdiff/csv.hpp"
#include "fastdiff/geometry.hpp"
#include "fastdiff/manifest.hpp"
#include "fastdiff/solver.hpp"

namespace fs = std::filesystem;
using namespace fastdiff;

namespace {

enum Exit { kOk = 0, kConfig = 2, kSolver = 3, kVerify = 4 };

std::ofstream open_out(const fs::path& p) {
    std::ofstream f(p);
    if (!f) throw ConfigError("cannot write '" + p.string() + "'");
    return f;
}

void prepare_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir)) throw ConfigError("cannot create output directory '" + dir.string() + "'");
}

/// Maps library exceptions onto exit codes; `log` receives the message.
template <typename Fn>
int guarded(std::ostream& log, Fn&& fn) {
    try {
        return fn();
    } catch (const SolverError& e) {
        log << "solver error at t = " << e.time() << ": " << e.what() << '\n';
        return kSolver;
    } catch (const FitUnstable& e) {
        log << "verification failed: " << e.what() << '\n';
        return kVerify;
    } catch (const InfeasibleWindow& e) {
        log << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const std::invalid_argument& e) {  // ParameterError, GridError
        log << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const ConfigError& e) {
        log << "config error: " << e.what() << '\n';
        return kConfig;
    } catch (const CsvError& e) {
        log << "input error: " << e.what() << '\n';
        return kConfig;
    }
}

int cmd_solve(const std::string& config_path, const fs::path& out, std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig cfg = load_config(config_path);
        const FlowParams p = cfg.params();
        prepare_dir(out);
        GridPtr grid = make_grid(RadialGrid::geometric(cfg.r_min, cfg.r_max, cfg.N));
        const Trajectory tr = solve(p, grid, cfg.solver);

        RunManifest man{"solve", cfg, std::nullopt, {}, {}, true};
        {
            auto f = open_out(out / "trajectory.csv");
            write_trajectory_csv(f, tr, cfg.stride);
        }
        man.outputs["trajectory"] = "trajectory.csv";
        man.summary["stored_times"] = tr.size();
        man.summary["t_final"] = tr.times.back();
        if (!p.is_degenerate()) {
            try {
                man.subsolution = cfg.subsolution(p);
            } catch (const InfeasibleWindow& e) {
                man.summary["subsolution_error"] = e.what();
            }
        }
        man.write((out / "manifest_solve.json").string());
        log << "solve: " << tr.size() << " steps to t = " << tr.times.back() << ", wrote "
            << (out / "trajectory.csv").string() << '\n';
        return int{kOk};
    });
}

int cmd_verify(const std::string& traj_path, const std::string& config_path, const fs::path& out,
               std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig cfg = load_config(config_path);
        const FlowParams p = cfg.params();
        const Trajectory tr = load_trajectory(traj_path, p);
        prepare_dir(out);
        RunManifest man{"verify", cfg, std::nullopt, {}, {}, true};

        const ClauseReport clauses = verify_theorem_clauses(tr, cfg.clauses);
        {
            auto f = open_out(out / "clauses.csv");
            write_clause_csv(f, clauses);
        }
        man.outputs["clauses"] = "clauses.csv";
        const auto failing = clauses.failing_clauses();
        man.summary["failing_clauses"] = failing;
        bool pass = failing.empty();

        if (!p.is_degenerate()) {
            const SubsolutionConfig sc = cfg.subsolution(p);
            man.subsolution = sc;
            SubsolutionSampling sampling = cfg.sampling;
            sampling.t_end = tr.times.back();
            const SubsolutionReport sub = verify_subsolution(p, sc, sampling);
            const auto sandwich = sandwich_check(tr, sc, cfg.sandwich_tol);
            {
                auto f = open_out(out / "subsolution.csv");
                write_subsolution_csv(f, sub);
            }
            {
                auto f = open_out(out / "sandwich.csv");
                write_sandwich_csv(f, sandwich);
            }
            man.outputs["subsolution"] = "subsolution.csv";
            man.outputs["sandwich"] = "sandwich.csv";
            const bool sw = std::all_of(sandwich.begin(), sandwich.end(), [](const auto& r) { return r.pass; });
            man.summary["subsolution_pass"] = sub.all_pass();
            man.summary["sandwich_pass"] = sw;
            if (!sub.all_pass()) log << "verify: subsolution check failed (" << sub.failures() << " rows)\n";
            if (!sw) log << "verify: sandwich check failed\n";
            pass = pass && sub.all_pass() && sw;
        }

        const auto bd = blowdown_diagnostics(tr, cfg.window_lo, cfg.window_hi);
        {
            auto f = open_out(out / "blowdown.csv");
            write_blowdown_csv(f, bd);
        }
        man.outputs["blowdown"] = "blowdown.csv";
        std::vector<double> dev;
        for (const auto& r : bd) dev.push_back(r.max_dev);
        man.summary["blowdown_monotone"] = nonincreasing_sequence(dev);
        man.summary["steady_deviation_final"] = bd.back().steady_dev;

        man.pass = pass;
        man.write((out / "manifest_verify.json").string());
        for (const auto& c : failing) log << "verify: clause (" << c << ") failed, worst metric " << clauses.worst(c) << '\n';
        log << "verify: " << (pass ? "PASS" : "FAIL") << '\n';
        return pass ? int{kOk} : int{kVerify};
    });
}

int cmd_geometry(const std::string& traj_path, const std::string& config_path, const fs::path& out,
                 bool initial_only, std::ostream& log) {
    return guarded(log, [&] {
        const RunConfig cfg = load_config(config_path);
        const FlowParams p = cfg.params();
        p.require_geometry();
        Trajectory tr = [&] {
            if (!traj_path.empty()) return load_trajectory(traj_path, p);
            GridPtr grid = make_grid(RadialGrid::geometric(cfg.r_min, cfg.r_max, cfg.N));
            BoundaryCondition bc{BoundaryKind::PinnedInitial, initial_profile(p, grid->r_min()),
                                 initial_profile(p, grid->r_max())};
            Trajectory t0{p, grid, bc, {0.0}, {}, std::nullopt};
            t0.fields.push_back(sample_field(grid, [&](double r) { return initial_profile(p, r); }).values);
            return t0;
        }();
        if (initial_only) {
            tr.times.resize(1);
            tr.fields.resize(1);
        }
        prepare_dir(out);
        RunManifest man{"geometry", cfg, std::nullopt, {}, {}, true};

        EndFitOptions opt;
        opt.skip = cfg.fit_skip;
        auto geo = open_out(out / "geometry.csv");
        auto fits = open_out(out / "endfits.csv");
        write_geometry_header(geo);
        write_endfit_header(fits);
        bool complete = true;
        double vol_err = 0.0;
        double curvature_err = 0.0;
        for (std::size_t k : thinned_times(tr.size(), cfg.stride)) {
            const RadialField f = tr.field(k);
            const GeometryProfile gp = geometry_profile(f, p);
            write_geometry_rows(geo, gp);
            for (EndId e : {EndId::E1, EndId::E2}) write_endfit_row(fits, gp.t, fit_end_asymptotics(gp, e, p, opt));
            const CompletenessReport cr = completeness_indicator(f, p, cfg.fit_skip);
            complete = complete && cr.inner.complete && cr.outer.complete;
            const VolumeLimits v = volume_form_limits(f, p, cfg.fit_skip);
            vol_err = std::max({vol_err, std::abs(v.inner / v.inner_ref - 1.0), std::abs(v.outer / v.outer_ref - 1.0)});
            if (k == 0) {
                const RadialGrid& g = *f.grid;
                const IndexWindow w = g.window(10.0 * g.r_min(), std::min(10.0, g.r_max()));
                for (std::size_t i = std::max<std::size_t>(w.first, 1); i <= w.last && i + 1 < g.size(); ++i) {
                    const double ex = scalar_curvature_initial(p, g[i]);
                    curvature_err = std::max(curvature_err, std::abs(gp.scal[i - 1] - ex) / std::abs(ex));
                }
            }
        }
        man.outputs["geometry"] = "geometry.csv";
        man.outputs["endfits"] = "endfits.csv";
        if (tr.size() >= 3) {
            auto f = open_out(out / "flow_residual.csv");
            write_flow_residual_csv(f, yamabe_flow_residual(tr));
            man.outputs["flow_residual"] = "flow_residual.csv";
        }
        man.summary["complete_both_ends"] = complete;
        man.summary["volume_limit_max_rel_error"] = vol_err;
        man.summary["initial_curvature_max_rel_error"] = curvature_err;
        man.summary["yamabe_constant"] = yamabe_constant_sphere(p.n());
        man.summary["flow_time_slope"] = flow_time_slope(p.n());
        man.pass = complete && vol_err <= 0.02;
        man.write((out / "manifest_geometry.json").string());
        log << "geometry: complete=" << complete << " volume_err=" << vol_err
            << " curvature_err(t=0)=" << curvature_err << " -> " << (man.pass ? "PASS" : "FAIL") << '\n';
        return man.pass ? int{kOk} : int{kVerify};
    });
}

int cmd_sweep(const fs::path& configs, const fs::path& out, unsigned jobs, std::ostream& log) {
    std::vector<fs::path> files;
    if (!fs::is_directory(configs)) {
        log << "config error: '" << configs.string() << "' is not a directory\n";
        return kConfig;
    }
    for (const auto& e : fs::directory_iterator(configs))
        if (e.is_regular_file() && e.path().extension() == ".cfg") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        log << "config error: no .cfg files in '" << configs.string() << "'\n";
        return kConfig;
    }

    std::vector<int> codes(files.size(), 0);
    std::vector<std::string> logs(files.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < files.size(); i = next++) {
            std::ostringstream l;
            const fs::path dir = out / files[i].stem();
            int code = cmd_solve(files[i].string(), dir, l);
            if (code == kOk) code = cmd_verify((dir / "trajectory.csv").string(), files[i].string(), dir, l);
            codes[i] = code;
            logs[i] = l.str();
        }
    };
    std::vector<std::thread> pool;
    const unsigned k = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(files.size())));
    for (unsigned j = 0; j < k; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();

    int worst = kOk;
    for (std::size_t i = 0; i < files.size(); ++i) {
        log << "[" << files[i].stem().string() << "] exit " << codes[i] << '\n' << logs[i];
        worst = std::max(worst, codes[i]);
    }
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Singular fast diffusion lab: solve, verify, geometry, sweep"};
    app.require_subcommand(1);

    std::string config, traj, out, configs;
    bool initial_only = false;
    unsigned jobs = 1;

    auto* solve_cmd = app.add_subcommand("solve", "Integrate the truncated problem and write trajectory.csv");
    solve_cmd->add_option("--config", config, "Config file")->required();
    solve_cmd->add_option("--out", out, "Output directory")->required();

    auto* verify_cmd = app.add_subcommand("verify", "Check the clause table, sandwich and subsolution");
    verify_cmd->add_option("--traj", traj, "Trajectory CSV")->required();
    verify_cmd->add_option("--config", config, "Config file")->required();
    verify_cmd->add_option("--out", out, "Output directory")->required();

    auto* geometry_cmd = app.add_subcommand("geometry", "Conformal-metric diagnostics (critical exponent only)");
    geometry_cmd->add_option("--traj", traj, "Trajectory CSV (omit with --initial-only to use u0)");
    geometry_cmd->add_option("--config", config, "Config file")->required();
    geometry_cmd->add_option("--out", out, "Output directory")->required();
    geometry_cmd->add_flag("--initial-only", initial_only, "Use only the t = 0 slice");

    auto* sweep_cmd = app.add_subcommand("sweep", "solve + verify for every *.cfg in a directory");
    sweep_cmd->add_option("--configs", configs, "Directory of config files")->required();
    sweep_cmd->add_option("--out", out, "Output root")->required();
    sweep_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfig;
    }

    if (*solve_cmd) return cmd_solve(config, out, std::cerr);
    if (*verify_cmd) return cmd_verify(traj, config, out, std::cerr);
    if (*geometry_cmd) {
        if (traj.empty() && !initial_only) {
            std::cerr << "config error: geometry needs --traj unless --initial-only is given\n";
            return kConfig;
        }
        return cmd_geometry(traj, config, out, initial_only, std::cerr);
    }
    if (*sweep_cmd) return cmd_sweep(configs, out, jobs, std::cerr);
    return kConfig;
}
