#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fastdiff {

class GridError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Half-open index range [first, last] (inclusive) into a grid.
struct IndexWindow {
    std::size_t first = 0;
    std::size_t last = 0;
    std::size_t count() const { return last >= first ? last - first + 1 : 0; }
};

/// Log-spaced radial mesh on [r_min, r_max] with an exact node at r = 1.
///
/// The mesh is geometric on [r_min, 1] and on [1, r_max] separately, with node
/// counts proportional to the logarithmic lengths; for bounds symmetric in log r
/// and odd N the ratio is uniform, q = (r_max/r_min)^{1/(N-1)}.
/// An origin grid prepends r = 0 for the regularized (full-ball) problem.
class RadialGrid {
public:
    static RadialGrid geometric(double r_min, double r_max, std::size_t count) {
        if (!(r_min > 0.0) || !(r_max > r_min)) {
            throw GridError("grid requires 0 < r_min < r_max");
        }
        if (!(r_min < 1.0 && r_max > 1.0)) {
            throw GridError("grid requires r_min < 1 < r_max (exact node at r = 1)");
        }
        if (count < 3) {
            throw GridError("grid requires at least 3 nodes");
        }
        const double log_in = -std::log(r_min);
        const double log_out = std::log(r_max);
        const double total = log_in + log_out;
        const std::size_t intervals = count - 1;
        auto k = static_cast<std::size_t>(std::llround(intervals * log_in / total));
        k = std::clamp<std::size_t>(k, 1, intervals - 1);

        std::vector<double> nodes(count);
        for (std::size_t i = 0; i <= k; ++i) {
            nodes[i] = std::exp(-log_in * static_cast<double>(k - i) / static_cast<double>(k));
        }
        const std::size_t outer = intervals - k;
        for (std::size_t j = 1; j <= outer; ++j) {
            nodes[k + j] = std::exp(log_out * static_cast<double>(j) / static_cast<double>(outer));
        }
        nodes.front() = r_min;
        nodes[k] = 1.0;
        nodes.back() = r_max;
        return RadialGrid(std::move(nodes), false);
    }

    /// Origin grid: node 0 at r = 0 followed by a geometric mesh on [r_first, r_max].
    static RadialGrid with_origin(double r_first, double r_max, std::size_t count) {
        if (count < 4) {
            throw GridError("origin grid requires at least 4 nodes");
        }
        RadialGrid positive = geometric(r_first, r_max, count - 1);
        std::vector<double> nodes;
        nodes.reserve(count);
        nodes.push_back(0.0);
        nodes.insert(nodes.end(), positive.nodes_.begin(), positive.nodes_.end());
        return RadialGrid(std::move(nodes), true);
    }

    /// Grid from explicit nodes (e.g. read back from a trajectory file).
    static RadialGrid from_nodes(std::vector<double> nodes) {
        if (nodes.size() < 3) {
            throw GridError("grid requires at least 3 nodes");
        }
        const bool origin = nodes.front() == 0.0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (!(nodes[i] > nodes[i - 1])) {
                throw GridError("grid nodes must be strictly increasing");
            }
        }
        if (!origin && !(nodes.front() > 0.0)) {
            throw GridError("grid nodes must be positive");
        }
        return RadialGrid(std::move(nodes), origin);
    }

    /// Inserts the geometric midpoint of every interval (arithmetic for [0, r1]).
    /// Every node of *this is a node of the result.
    RadialGrid refined() const {
        std::vector<double> out;
        out.reserve(2 * nodes_.size() - 1);
        for (std::size_t i = 0; i + 1 < nodes_.size(); ++i) {
            out.push_back(nodes_[i]);
            const double mid = nodes_[i] == 0.0 ? 0.5 * nodes_[i + 1]
                                                : std::sqrt(nodes_[i] * nodes_[i + 1]);
            out.push_back(mid);
        }
        out.push_back(nodes_.back());
        return RadialGrid(std::move(out), has_origin_);
    }

    std::span<const double> nodes() const { return nodes_; }
    double operator[](std::size_t i) const { return nodes_[i]; }
    std::size_t size() const { return nodes_.size(); }
    double r_min() const { return nodes_.front(); }
    double r_max() const { return nodes_.back(); }
    bool has_origin() const { return has_origin_; }

    /// First node with r > 0.
    std::size_t first_positive() const { return has_origin_ ? 1 : 0; }

    /// Index of the node r = 1 if present (always present for generated grids).
    std::size_t unit_index() const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), 1.0 - 1e-12);
        if (it == nodes_.end() || std::abs(*it - 1.0) > 1e-12) {
            throw GridError("grid has no node at r = 1");
        }
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    std::size_t index_of(double r, double rel_tol = 1e-12) const {
        auto it = std::lower_bound(nodes_.begin(), nodes_.end(), r * (1.0 - rel_tol));
        if (it == nodes_.end() || std::abs(*it - r) > rel_tol * std::max(1.0, std::abs(r))) {
            throw GridError("no grid node at r = " + std::to_string(r));
        }
        return static_cast<std::size_t>(it - nodes_.begin());
    }

    /// Nodes in [ra, rb].
    IndexWindow window(double ra, double rb) const {
        auto lo = std::lower_bound(nodes_.begin(), nodes_.end(), ra * (1.0 - 1e-12));
        auto hi = std::upper_bound(nodes_.begin(), nodes_.end(), rb * (1.0 + 1e-12));
        if (lo == nodes_.end() || hi == nodes_.begin() || lo >= hi) {
            throw GridError("window [" + std::to_string(ra) + ", " + std::to_string(rb) +
                            "] contains no grid node");
        }
        return {static_cast<std::size_t>(lo - nodes_.begin()),
                static_cast<std::size_t>(hi - nodes_.begin()) - 1};
    }

    /// Innermost decade [r_first, 10 r_first] without `skip` boundary-adjacent nodes.
    IndexWindow inner_decade(std::size_t skip) const {
        const std::size_t fp = first_positive();
        IndexWindow w = window(nodes_[fp], 10.0 * nodes_[fp]);
        w.first = fp + skip;
        return w;
    }

    /// Outermost decade [r_max/10, r_max] without `skip` boundary-adjacent nodes.
    IndexWindow outer_decade(std::size_t skip) const {
        IndexWindow w = window(r_max() / 10.0, r_max());
        w.last = size() - 1 - skip;
        return w;
    }

    friend bool operator==(const RadialGrid& a, const RadialGrid& b) { return a.nodes_ == b.nodes_; }

private:
    RadialGrid(std::vector<double> nodes, bool origin) : nodes_(std::move(nodes)), has_origin_(origin) {}

    std::vector<double> nodes_;
    bool has_origin_ = false;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

inline GridPtr make_grid(RadialGrid g) { return std::make_shared<const RadialGrid>(std::move(g)); }

/// u(·, t) sampled on a grid.
struct RadialField {
    GridPtr grid;
    std::vector<double> values;
    double time = 0.0;

    std::size_t size() const { return values.size(); }
    double r(std::size_t i) const { return (*grid)[i]; }
};

template <typename Fn>
RadialField sample_field(GridPtr grid, Fn&& fn, double time = 0.0) {
    RadialField f{grid, std::vector<double>(grid->size()), time};
    for (std::size_t i = 0; i < grid->size(); ++i) f.values[i] = fn((*grid)[i]);
    return f;
}

/// Relative tolerance for rounding-level monotonicity violations.
inline constexpr double kMonotoneTolerance = 1e-10;

inline bool is_positive(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return x > 0.0; });
}

inline bool is_nonincreasing(std::span<const double> v, double rel_tol = kMonotoneTolerance) {
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v[i] - v[i - 1] > rel_tol * std::abs(v[i - 1])) return false;
    }
    return true;
}

/// Coefficients of a three-point stencil row: lo·f[i-1] + di·f[i] + up·f[i+1].
struct Stencil3 {
    double lo = 0.0;
    double di = 0.0;
    double up = 0.0;

    double apply(std::span<const double> f, std::size_t i) const {
        return lo * f[i - 1] + di * f[i] + up * f[i + 1];
    }
};

namespace stencil {

/// f'' from the quadratic through (r-h1, r, r+h2).
inline Stencil3 second_derivative(double h1, double h2) {
    return {2.0 / (h1 * (h1 + h2)), -2.0 / (h1 * h2), 2.0 / (h2 * (h1 + h2))};
}

/// f' from the same quadratic.
inline Stencil3 first_derivative(double h1, double h2) {
    return {-h2 / (h1 * (h1 + h2)), (h2 - h1) / (h1 * h2), h1 / (h2 * (h1 + h2))};
}

}  // namespace stencil

/// Rows of the radial Laplacian f'' + (n-1) f'/r, one per node.
///
/// Rows 0 and N-1 are zero except on origin grids, where row 0 uses the
/// symmetric extension f(-h) = f(h): Δf(0) ≈ 2n (f1 - f0)/h².
inline std::vector<Stencil3> laplacian_rows(const RadialGrid& g, int n) {
    std::vector<Stencil3> rows(g.size());
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        const double h1 = g[i] - g[i - 1];
        const double h2 = g[i + 1] - g[i];
        const Stencil3 d2 = stencil::second_derivative(h1, h2);
        const Stencil3 d1 = stencil::first_derivative(h1, h2);
        const double c = (n - 1) / g[i];
        rows[i] = {d2.lo + c * d1.lo, d2.di + c * d1.di, d2.up + c * d1.up};
    }
    if (g.has_origin()) {
        const double h = g[1];
        rows[0] = {0.0, -2.0 * n / (h * h), 2.0 * n / (h * h)};
    }
    return rows;
}

namespace detail {

template <typename RowFn>
std::vector<double> apply_interior(const RadialGrid& g, std::span<const double> f, RowFn&& row) {
    if (f.size() != g.size()) {
        throw GridError("field size does not match grid");
    }
    if (g.size() < 3) {
        throw GridError("stencil requires at least 3 nodes");
    }
    std::vector<double> out(g.size() - 2);
    for (std::size_t i = 1; i + 1 < g.size(); ++i) {
        out[i - 1] = row(g[i] - g[i - 1], g[i + 1] - g[i], g[i]).apply(f, i);
    }
    return out;
}

}  // namespace detail

/// Δf = f'' + (n-1) f'/r at interior nodes 1..N-2 (entry k is node k+1).
inline std::vector<double> radial_laplacian(const RadialGrid& g, int n, std::span<const double> f) {
    return detail::apply_interior(g, f, [n](double h1, double h2, double r) {
        const Stencil3 d2 = stencil::second_derivative(h1, h2);
        const Stencil3 d1 = stencil::first_derivative(h1, h2);
        const double c = (n - 1) / r;
        return Stencil3{d2.lo + c * d1.lo, d2.di + c * d1.di, d2.up + c * d1.up};
    });
}

inline std::vector<double> radial_laplacian(const RadialField& f, int n) {
    return radial_laplacian(*f.grid, n, f.values);
}

/// ∂r f at interior nodes 1..N-2.
inline std::vector<double> radial_gradient(const RadialGrid& g, std::span<const double> f) {
    return detail::apply_interior(g, f, [](double h1, double h2, double) {
        return stencil::first_derivative(h1, h2);
    });
}

inline std::vector<double> radial_gradient(const RadialField& f) { return radial_gradient(*f.grid, f.values); }

/// ∂r² f at interior nodes 1..N-2.
inline std::vector<double> radial_second_derivative(const RadialGrid& g, std::span<const double> f) {
    return detail::apply_interior(g, f, [](double h1, double h2, double) {
        return stencil::second_derivative(h1, h2);
    });
}

}  // namespace fastdiff
