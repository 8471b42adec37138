#pragma once

#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastdiff/blowdown.hpp"
#include "fastdiff/clauses.hpp"
#include "fastdiff/comparison.hpp"
#include "fastdiff/geometry.hpp"
#include "fastdiff/solver.hpp"

namespace fastdiff {

class CsvError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Round-trip formatting: 17 significant digits.
inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline const char* fmt_bool(bool b) { return b ? "1" : "0"; }

/// Indices of the stored times written with a given stride; the last time is always kept.
inline std::vector<std::size_t> thinned_times(std::size_t count, std::size_t stride) {
    std::vector<std::size_t> ks;
    if (count == 0) return ks;
    stride = std::max<std::size_t>(stride, 1);
    for (std::size_t k = 0; k < count; k += stride) ks.push_back(k);
    if (ks.back() != count - 1) ks.push_back(count - 1);
    return ks;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& tr, std::size_t stride = 1) {
    os << "t,r,u\n";
    for (std::size_t k : thinned_times(tr.size(), stride)) {
        const std::string t = fmt17(tr.times[k]);
        for (std::size_t i = 0; i < tr.grid->size(); ++i) {
            os << t << ',' << fmt17((*tr.grid)[i]) << ',' << fmt17(tr.fields[k][i]) << '\n';
        }
    }
}

inline void write_clause_csv(std::ostream& os, const ClauseReport& rep) {
    os << "t,clause,metric,tolerance,pass\n";
    for (const auto& r : rep.rows) {
        os << fmt17(r.t) << ',' << r.clause << ',' << fmt17(r.metric) << ',' << fmt17(r.tolerance) << ','
           << fmt_bool(r.pass) << '\n';
    }
}

inline void write_subsolution_csv(std::ostream& os, const SubsolutionReport& rep) {
    os << "kind,r,t,quantity,bound,pass\n";
    for (const auto& r : rep.rows) {
        os << r.kind << ',' << fmt17(r.r) << ',' << fmt17(r.t) << ',' << fmt17(r.quantity) << ','
           << fmt17(r.bound) << ',' << fmt_bool(r.pass) << '\n';
    }
}

inline void write_sandwich_csv(std::ostream& os, const std::vector<SandwichRow>& rows) {
    os << "t,lower_violation,upper_violation,tolerance,pass\n";
    for (const auto& r : rows) {
        os << fmt17(r.t) << ',' << fmt17(r.lower_violation) << ',' << fmt17(r.upper_violation) << ','
           << fmt17(r.tolerance) << ',' << fmt_bool(r.pass) << '\n';
    }
}

inline void write_blowdown_csv(std::ostream& os, const std::vector<BlowdownRow>& rows) {
    os << "t,max_dev,max_grad,max_curv,steady_dev\n";
    for (const auto& r : rows) {
        os << fmt17(r.t) << ',' << fmt17(r.max_dev) << ',' << fmt17(r.max_grad) << ',' << fmt17(r.max_curv)
           << ',' << fmt17(r.steady_dev) << '\n';
    }
}

/// One block per profile; scal is empty at the two boundary nodes.
inline void write_geometry_header(std::ostream& os) { os << "t,r,rho,F,scal,vol_density\n"; }

inline void write_geometry_rows(std::ostream& os, const GeometryProfile& gp) {
    const RadialGrid& g = *gp.grid;
    const std::string t = fmt17(gp.t);
    for (std::size_t i = 0; i < g.size(); ++i) {
        os << t << ',' << fmt17(g[i]) << ',' << fmt17(gp.rho[i]) << ',' << fmt17(gp.F[i]) << ',';
        if (i > 0 && i + 1 < g.size()) os << fmt17(gp.scal[i - 1]);
        os << ',' << fmt17(gp.vol_density[i]) << '\n';
    }
}

inline void write_endfit_header(std::ostream& os) { os << "t,end,slope,order,ref_slope,ref_order,residual\n"; }

inline void write_endfit_row(std::ostream& os, double t, const EndFit& f) {
    os << fmt17(t) << ',' << to_string(f.end) << ',' << fmt17(f.slope) << ','
       << (f.order_fitted ? fmt17(f.order) : std::string()) << ',' << fmt17(f.ref_slope) << ','
       << fmt17(f.ref_order) << ',' << fmt17(f.residual) << '\n';
}

inline void write_flow_residual_csv(std::ostream& os, const std::vector<FlowResidualRow>& rows) {
    os << "t,max_abs,max_rel\n";
    for (const auto& r : rows) os << fmt17(r.t) << ',' << fmt17(r.max_abs) << ',' << fmt17(r.max_rel) << '\n';
}

/// Raw table of a `t,r,u` file: distinct times in order and the node list of
/// the first time block. Every block must repeat the same nodes.
struct TrajectoryTable {
    std::vector<double> times;
    std::vector<double> nodes;
    std::vector<std::vector<double>> fields;
};

inline TrajectoryTable read_trajectory_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line)) throw CsvError("trajectory CSV is empty");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,r,u") throw CsvError("trajectory CSV header must be 't,r,u', got '" + line + "'");
    TrajectoryTable tab;
    std::size_t lineno = 1;
    std::size_t idx = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        double t = 0, r = 0, u = 0;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> t >> c1 >> r >> c2 >> u) || c1 != ',' || c2 != ',') {
            throw CsvError("trajectory CSV line " + std::to_string(lineno) + " is malformed");
        }
        if (tab.times.empty() || t != tab.times.back()) {
            if (!tab.times.empty() && !(t > tab.times.back())) {
                throw CsvError("trajectory CSV times must increase (line " + std::to_string(lineno) + ")");
            }
            if (!tab.fields.empty() && tab.fields.back().size() != tab.nodes.size()) {
                throw CsvError("trajectory CSV time block has a different node count");
            }
            tab.times.push_back(t);
            tab.fields.emplace_back();
            idx = 0;
        }
        if (tab.times.size() == 1) {
            tab.nodes.push_back(r);
        } else if (idx >= tab.nodes.size() || r != tab.nodes[idx]) {
            throw CsvError("trajectory CSV node mismatch at line " + std::to_string(lineno));
        }
        tab.fields.back().push_back(u);
        ++idx;
    }
    if (tab.times.empty()) throw CsvError("trajectory CSV has no rows");
    if (tab.fields.back().size() != tab.nodes.size()) {
        throw CsvError("trajectory CSV time block has a different node count");
    }
    return tab;
}

/// Rebuilds a pinned-initial trajectory from a table and its parameters.
inline Trajectory trajectory_from_table(const TrajectoryTable& tab, const FlowParams& p) {
    GridPtr grid = make_grid(RadialGrid::from_nodes(tab.nodes));
    BoundaryCondition bc{BoundaryKind::PinnedInitial, tab.fields.front().front(), tab.fields.front().back()};
    return Trajectory{p, grid, bc, tab.times, tab.fields, std::nullopt};
}

inline Trajectory load_trajectory(const std::string& path, const FlowParams& p) {
    std::ifstream f(path);
    if (!f) throw CsvError("cannot read trajectory file '" + path + "'");
    return trajectory_from_table(read_trajectory_csv(f), p);
}

}  // namespace fastdiff
