#pragma once

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "fastdiff/clauses.hpp"
#include "fastdiff/comparison.hpp"
#include "fastdiff/params.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

/// Malformed config text: unknown key, bad number, missing required key.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Everything a run needs, read from a flat `key = value` file.
struct RunConfig {
    int n = 5;
    double m = 3.0 / 7.0;
    bool m_critical = false;
    double lambda = 4.0;
    double c1 = 1.0;
    double c2 = 1.0;

    double r_min = 1e-3;
    double r_max = 1e3;
    std::size_t N = 2048;

    SolverConfig solver{};
    std::size_t stride = 1;

    ClauseTolerances clauses{};
    double sandwich_tol = 1e-6;
    SubsolutionSampling sampling{};
    double margin = 0.1;
    std::optional<double> nu, mu, delta, A;

    double window_lo = 0.5;
    double window_hi = 2.0;
    double steady_tol = 0.01;
    std::size_t fit_skip = 5;

    FlowParams params() const { return FlowParams(n, m, lambda, c1, c2); }

    /// Auto-selected constants, with any explicit overrides applied.
    SubsolutionConfig subsolution(const FlowParams& p) const {
        SubsolutionConfig c = pick_admissible_config(p, margin);
        if (nu || mu || delta) {
            c.nu = nu.value_or(c.nu);
            c.mu = mu.value_or(c.mu);
            c.delta = delta.value_or(c.delta);
            c.A = (1.0 + margin) * minimal_amplitude(p, c);
        }
        if (A) c.A = *A;
        validate_config(p, c);
        return c;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
    std::size_t pos = 0;
    double x = 0.0;
    try {
        x = std::stod(v, &pos);
    } catch (const std::exception&) {
        throw ConfigError("config: '" + key + "' is not a number: '" + v + "'");
    }
    if (pos != v.size()) throw ConfigError("config: '" + key + "' is not a number: '" + v + "'");
    return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
    const double x = parse_double(key, v);
    if (x != static_cast<double>(static_cast<long long>(x))) {
        throw ConfigError("config: '" + key + "' must be an integer: '" + v + "'");
    }
    return static_cast<long long>(x);
}

inline std::size_t parse_count(const std::string& key, const std::string& v) {
    const long long x = parse_int(key, v);
    if (x < 0) throw ConfigError("config: '" + key + "' must be >= 0");
    return static_cast<std::size_t>(x);
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment. `m = critical` resolves to
/// (n-2)/(n+2) after all keys are read.
inline RunConfig parse_config(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = detail::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(lineno) + ": expected 'key = value'");
        }
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));
        if (key.empty() || val.empty()) {
            throw ConfigError("config line " + std::to_string(lineno) + ": empty key or value");
        }
        if (!kv.emplace(key, val).second) throw ConfigError("config: duplicate key '" + key + "'");
    }

    RunConfig c;
    using detail::parse_count;
    using detail::parse_double;
    for (const auto& [k, v] : kv) {
        if (k == "n") c.n = static_cast<int>(detail::parse_int(k, v));
        else if (k == "m") {
            if (v == "critical") c.m_critical = true;
            else c.m = parse_double(k, v);
        }
        else if (k == "lambda") c.lambda = parse_double(k, v);
        else if (k == "c1") c.c1 = parse_double(k, v);
        else if (k == "c2") c.c2 = parse_double(k, v);
        else if (k == "r_min") c.r_min = parse_double(k, v);
        else if (k == "r_max") c.r_max = parse_double(k, v);
        else if (k == "N") c.N = parse_count(k, v);
        else if (k == "dt0") c.solver.dt0 = parse_double(k, v);
        else if (k == "t_end") c.solver.t_end = parse_double(k, v);
        else if (k == "theta") c.solver.theta = parse_double(k, v);
        else if (k == "newton_tol") c.solver.newton_tol = parse_double(k, v);
        else if (k == "newton_max") c.solver.newton_max = static_cast<int>(detail::parse_int(k, v));
        else if (k == "step_growth") c.solver.step_growth = parse_double(k, v);
        else if (k == "dt_max") c.solver.dt_max = parse_double(k, v);
        else if (k == "stride") c.stride = std::max<std::size_t>(1, parse_count(k, v));
        else if (k == "tol_radial") c.clauses.radial = parse_double(k, v);
        else if (k == "tol_time") c.clauses.time = parse_double(k, v);
        else if (k == "tol_inner") c.clauses.inner = parse_double(k, v);
        else if (k == "tol_gradient") c.clauses.gradient = parse_double(k, v);
        else if (k == "tol_outer") c.clauses.outer = parse_double(k, v);
        else if (k == "boundary_skip") c.clauses.boundary_skip = parse_count(k, v);
        else if (k == "sandwich_tol") c.sandwich_tol = parse_double(k, v);
        else if (k == "residual_tol") c.sampling.residual_tolerance = parse_double(k, v);
        else if (k == "sub_times") c.sampling.times = parse_count(k, v);
        else if (k == "margin") c.margin = parse_double(k, v);
        else if (k == "nu") c.nu = parse_double(k, v);
        else if (k == "mu") c.mu = parse_double(k, v);
        else if (k == "delta") c.delta = parse_double(k, v);
        else if (k == "A") c.A = parse_double(k, v);
        else if (k == "window_lo") c.window_lo = parse_double(k, v);
        else if (k == "window_hi") c.window_hi = parse_double(k, v);
        else if (k == "steady_tol") c.steady_tol = parse_double(k, v);
        else if (k == "fit_skip") c.fit_skip = parse_count(k, v);
        else throw ConfigError("config: unknown key '" + k + "'");
    }
    if (c.m_critical) c.m = critical_exponent(c.n);
    c.sampling.t_end = c.solver.t_end;
    c.solver.validate();
    return c;
}

inline RunConfig load_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot read config file '" + path + "'");
    std::ostringstream ss;
    ss << f.rdbuf();
    return parse_config(ss.str());
}

}  // namespace fastdiff
