#pragma once

#include <json.hpp>

#include <fstream>
#include <map>
#include <optional>
#include <string>

#include "fastdiff/comparison.hpp"
#include "fastdiff/config.hpp"

namespace fastdiff {

inline constexpr const char* kToolVersion = "0.1.0";

/// Machine-readable record of one CLI stage.
struct RunManifest {
    std::string command;
    RunConfig config;
    std::optional<SubsolutionConfig> subsolution;
    std::map<std::string, std::string> outputs;
    std::map<std::string, nlohmann::json> summary;
    bool pass = true;

    nlohmann::json to_json() const {
        using nlohmann::json;
        const RunConfig& c = config;
        json j;
        j["tool"] = "fastdiff";
        j["version"] = kToolVersion;
        j["command"] = command;
        j["params"] = {{"n", c.n}, {"m", c.m}, {"m_critical", c.m_critical}, {"lambda", c.lambda},
                       {"c1", c.c1}, {"c2", c.c2}};
        j["grid"] = {{"r_min", c.r_min}, {"r_max", c.r_max}, {"N", c.N}};
        j["solver"] = {{"dt0", c.solver.dt0},
                       {"t_end", c.solver.t_end},
                       {"theta", c.solver.theta},
                       {"newton_tol", c.solver.newton_tol},
                       {"newton_max", c.solver.newton_max},
                       {"step_growth", c.solver.step_growth},
                       {"dt_max", c.solver.max_step()},
                       {"stride", c.stride}};
        j["tolerances"] = {{"radial", c.clauses.radial},
                           {"time", c.clauses.time},
                           {"inner", c.clauses.inner},
                           {"gradient", c.clauses.gradient},
                           {"outer", c.clauses.outer},
                           {"boundary_skip", c.clauses.boundary_skip},
                           {"sandwich", c.sandwich_tol},
                           {"residual", c.sampling.residual_tolerance},
                           {"steady", c.steady_tol}};
        j["window"] = {c.window_lo, c.window_hi};
        if (subsolution) {
            j["subsolution"] = {{"nu", subsolution->nu},
                                {"mu", subsolution->mu},
                                {"delta", subsolution->delta},
                                {"A", subsolution->A},
                                {"margin", c.margin}};
        }
        j["outputs"] = outputs;
        j["summary"] = summary;
        j["pass"] = pass;
        return j;
    }

    void write(const std::string& path) const {
        std::ofstream f(path);
        f << to_json().dump(2) << '\n';
    }
};

}  // namespace fastdiff
