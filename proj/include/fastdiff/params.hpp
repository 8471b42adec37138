#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>

namespace fastdiff {

/// Raised for any violation of the admissible parameter window.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a geometry operation receives parameters outside its domain
/// (non-critical exponent or vanishing outer amplitude).
class GeometryDomainError : public ParameterError {
public:
    using ParameterError::ParameterError;
};

/// Slack applied to every strict inequality of the parameter window.
inline constexpr double kWindowSlack = 1e-12;

/// m_c = (n-2)/(n+2), the exponent at which the equation is the flat Yamabe flow.
inline double critical_exponent(int n) {
    if (n < 3) {
        throw ParameterError("critical exponent requires n >= 3");
    }
    return static_cast<double>(n - 2) / static_cast<double>(n + 2);
}

namespace detail {

/// log(exp(a) + exp(b)) without overflow; -inf operands are allowed.
inline double log_add_exp(double a, double b) {
    if (a < b) std::swap(a, b);
    if (std::isinf(a) && a < 0) return a;
    return a + std::log1p(std::exp(b - a));
}

inline std::string fmt_num(double v) {
    std::ostringstream os;
    os.precision(10);
    os << v;
    return os.str();
}

}  // namespace detail

/// Problem constants of  u_t = Δ(u^m),  u(x,0) = (c1^m |x|^{-mλ} + c2^m)^{1/m}.
///
/// Construction validates the open window
///   0 < m < (n-2)/n,   2/(1-m) < λ < (n-2)/m,   c1 >= 0, c2 >= 0, c1 + c2 > 0.
/// c1 = 0 is accepted as the degenerate constant solution u ≡ c2.
class FlowParams {
public:
    FlowParams(int n, double m, double lambda, double c1, double c2)
        : n_(n), m_(m), lambda_(lambda), c1_(c1), c2_(c2) {
        validate();
    }

    int n() const { return n_; }
    double m() const { return m_; }
    double lambda() const { return lambda_; }
    double c1() const { return c1_; }
    double c2() const { return c2_; }

    bool is_critical() const { return std::abs(m_ - critical_exponent(n_)) <= kWindowSlack; }
    bool is_degenerate() const { return c1_ == 0.0; }

    /// Window for the geometric interpretation: m = m_c, (n+2)/2 < λ < n+2, c1, c2 > 0.
    void require_geometry() const {
        if (!is_critical()) {
            throw GeometryDomainError("geometry requires the critical exponent m = (n-2)/(n+2) = " +
                                      detail::fmt_num(critical_exponent(n_)) + ", got m = " +
                                      detail::fmt_num(m_));
        }
        if (c2_ <= 0.0) {
            throw GeometryDomainError("geometry requires c2 > 0");
        }
        if (c1_ <= 0.0) {
            throw GeometryDomainError("geometry requires c1 > 0");
        }
        const double lo = 0.5 * (n_ + 2);
        const double hi = static_cast<double>(n_ + 2);
        if (!(lambda_ > lo + kWindowSlack && lambda_ < hi - kWindowSlack)) {
            throw GeometryDomainError("geometry requires (n+2)/2 < lambda < n+2");
        }
    }

    friend bool operator==(const FlowParams&, const FlowParams&) = default;

private:
    void validate() const {
        if (n_ < 3) {
            throw ParameterError("n >= 3 violated: n = " + std::to_string(n_));
        }
        const double m_hi = static_cast<double>(n_ - 2) / n_;
        if (!(m_ > kWindowSlack)) {
            throw ParameterError("0 < m violated: m = " + detail::fmt_num(m_));
        }
        if (!(m_ < m_hi - kWindowSlack)) {
            throw ParameterError("m < (n-2)/n violated: m = " + detail::fmt_num(m_) +
                                 ", (n-2)/n = " + detail::fmt_num(m_hi));
        }
        const double lam_lo = 2.0 / (1.0 - m_);
        const double lam_hi = (n_ - 2) / m_;
        if (!(lambda_ > lam_lo + kWindowSlack)) {
            throw ParameterError("2/(1-m) < lambda violated: lambda = " + detail::fmt_num(lambda_) +
                                 ", 2/(1-m) = " + detail::fmt_num(lam_lo));
        }
        if (!(lambda_ < lam_hi - kWindowSlack)) {
            throw ParameterError("lambda < (n-2)/m violated: lambda = " + detail::fmt_num(lambda_) +
                                 ", (n-2)/m = " + detail::fmt_num(lam_hi));
        }
        if (!(c1_ >= 0.0) || !std::isfinite(c1_)) {
            throw ParameterError("c1 >= 0 violated: c1 = " + detail::fmt_num(c1_));
        }
        if (!(c2_ >= 0.0) || !std::isfinite(c2_)) {
            throw ParameterError("c2 >= 0 violated: c2 = " + detail::fmt_num(c2_));
        }
        if (c1_ == 0.0 && c2_ == 0.0) {
            throw ParameterError("c1 = c2 = 0 gives the zero solution, which is not positive");
        }
    }

    int n_;
    double m_;
    double lambda_;
    double c1_;
    double c2_;
};

/// Regularization parameter ε of the approximating problem on the full ball.
class RegularizationConfig {
public:
    explicit RegularizationConfig(double epsilon) : epsilon_(epsilon) {
        if (!(epsilon > 0.0 && epsilon < 1.0)) {
            throw ParameterError("regularization requires 0 < epsilon < 1, got " +
                                 detail::fmt_num(epsilon));
        }
    }
    double epsilon() const { return epsilon_; }

private:
    double epsilon_;
};

/// log u0(r), evaluated in log space so that r^{-mλ} never overflows.
inline double log_initial_profile(const FlowParams& p, double r) {
    if (!(r > 0.0)) {
        throw ParameterError("initial profile requires r > 0");
    }
    const double m = p.m();
    const double inner = p.c1() > 0 ? m * std::log(p.c1()) - m * p.lambda() * std::log(r)
                                    : -std::numeric_limits<double>::infinity();
    const double outer = p.c2() > 0 ? m * std::log(p.c2()) : -std::numeric_limits<double>::infinity();
    return detail::log_add_exp(inner, outer) / m;
}

/// u0(r) = (c1^m r^{-mλ} + c2^m)^{1/m}.
inline double initial_profile(const FlowParams& p, double r) {
    return std::exp(log_initial_profile(p, r));
}

/// u0(r)^m = c1^m r^{-mλ} + c2^m.
inline double initial_profile_pow_m(const FlowParams& p, double r) {
    return std::exp(p.m() * log_initial_profile(p, r));
}

/// u_{0,ε}(r) = (c1^m (r² + ε)^{-mλ/2} + c2^m + ε)^{1/m}; finite at r = 0.
inline double regularized_initial(const FlowParams& p, const RegularizationConfig& rc, double r) {
    if (!(r >= 0.0)) {
        throw ParameterError("regularized initial profile requires r >= 0");
    }
    const double m = p.m();
    const double eps = rc.epsilon();
    const double singular = p.c1() > 0
        ? m * std::log(p.c1()) - 0.5 * m * p.lambda() * std::log(r * r + eps)
        : -std::numeric_limits<double>::infinity();
    const double floor = std::log(std::pow(p.c2(), m) + eps);
    return std::exp(detail::log_add_exp(singular, floor) / m);
}

}  // namespace fastdiff
