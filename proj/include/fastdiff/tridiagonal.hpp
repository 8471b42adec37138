#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace fastdiff {

/// Thomas algorithm for  lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i].
/// lower[0] and upper[n-1] are ignored. No pivoting: intended for the
/// diagonally dominant M-matrices produced by the implicit diffusion step.
inline std::vector<double> solve_tridiagonal(std::span<const double> lower,
                                             std::span<const double> diag,
                                             std::span<const double> upper,
                                             std::span<const double> rhs) {
    const std::size_t n = diag.size();
    if (lower.size() != n || upper.size() != n || rhs.size() != n) {
        throw std::invalid_argument("tridiagonal system size mismatch");
    }
    std::vector<double> c(n), x(n);
    double denom = diag[0];
    if (denom == 0.0) throw std::runtime_error("singular tridiagonal system");
    c[0] = n > 1 ? upper[0] / denom : 0.0;
    x[0] = rhs[0] / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = diag[i] - lower[i] * c[i - 1];
        if (denom == 0.0) throw std::runtime_error("singular tridiagonal system");
        c[i] = i + 1 < n ? upper[i] / denom : 0.0;
        x[i] = (rhs[i] - lower[i] * x[i - 1]) / denom;
    }
    for (std::size_t i = n - 1; i-- > 0;) {
        x[i] -= c[i] * x[i + 1];
    }
    return x;
}

}  // namespace fastdiff
