#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <string>

#include "fastdiff/params.hpp"

using namespace fastdiff;

namespace {

FlowParams reference() { return FlowParams(5, 3.0 / 7.0, 4.0, 1.0, 1.0); }

std::string message_of(int n, double m, double lambda, double c1, double c2) {
    try {
        FlowParams(n, m, lambda, c1, c2);
    } catch (const ParameterError& e) {
        return e.what();
    }
    return "";
}

}  // namespace

TEST(CriticalExponent, KnownValues) {
    EXPECT_DOUBLE_EQ(critical_exponent(3), 1.0 / 5.0);
    EXPECT_DOUBLE_EQ(critical_exponent(5), 3.0 / 7.0);
    EXPECT_DOUBLE_EQ(critical_exponent(6), 0.5);
}

TEST(CriticalExponent, InsideDiffusionWindow) {
    for (int n = 3; n < 40; ++n) {
        const double mc = critical_exponent(n);
        EXPECT_GT(mc, 0.0);
        EXPECT_LT(mc, (n - 2.0) / n);
    }
}

TEST(CriticalExponent, RejectsSmallDimension) {
    EXPECT_THROW(critical_exponent(2), ParameterError);
    EXPECT_THROW(critical_exponent(0), ParameterError);
}

TEST(FlowParams, AcceptsReferenceSetup) {
    const FlowParams p = reference();
    EXPECT_EQ(p.n(), 5);
    EXPECT_TRUE(p.is_critical());
    EXPECT_FALSE(p.is_degenerate());
    EXPECT_NO_THROW(FlowParams(6, 0.5, 6.0, 1.0, 1.0).require_geometry());
}

TEST(FlowParams, MessagesNameTheViolatedInequality) {
    EXPECT_NE(message_of(5, 3.0 / 7.0, 3.0, 1, 1).find("2/(1-m) < lambda"), std::string::npos);
    EXPECT_NE(message_of(5, 3.0 / 7.0, 7.5, 1, 1).find("lambda < (n-2)/m"), std::string::npos);
    EXPECT_NE(message_of(5, 0.7, 4.0, 1, 1).find("m < (n-2)/n"), std::string::npos);
    EXPECT_NE(message_of(5, 0.0, 4.0, 1, 1).find("0 < m"), std::string::npos);
    EXPECT_NE(message_of(2, 0.1, 4.0, 1, 1).find("n >= 3"), std::string::npos);
    EXPECT_NE(message_of(5, 3.0 / 7.0, 4.0, -1, 1).find("c1 >= 0"), std::string::npos);
    EXPECT_NE(message_of(5, 3.0 / 7.0, 4.0, 1, -1).find("c2 >= 0"), std::string::npos);
}

TEST(FlowParams, WindowIsOpen) {
    // λ exactly at 2/(1-m) = 3.5 and at (n-2)/m = 7 are rejected.
    EXPECT_THROW(FlowParams(5, 3.0 / 7.0, 3.5, 1, 1), ParameterError);
    EXPECT_THROW(FlowParams(5, 3.0 / 7.0, 7.0, 1, 1), ParameterError);
    EXPECT_THROW(FlowParams(5, 0.6, 4.0, 1, 1), ParameterError);
    EXPECT_NO_THROW(FlowParams(5, 3.0 / 7.0, 3.5 + 1e-9, 1, 1));
}

TEST(FlowParams, DegenerateAmplitudes) {
    EXPECT_TRUE(FlowParams(5, 3.0 / 7.0, 4.0, 0.0, 1.0).is_degenerate());
    EXPECT_NO_THROW(FlowParams(5, 3.0 / 7.0, 4.0, 1.0, 0.0));
    EXPECT_THROW(FlowParams(5, 3.0 / 7.0, 4.0, 0.0, 0.0), ParameterError);
}

TEST(FlowParams, GeometryDomain) {
    EXPECT_NO_THROW(reference().require_geometry());
    EXPECT_THROW(FlowParams(5, 3.0 / 7.0, 4.0, 0, 1).require_geometry(), GeometryDomainError);
    EXPECT_THROW(FlowParams(5, 0.3, 4.0, 1, 1).require_geometry(), GeometryDomainError);
    EXPECT_THROW(FlowParams(6, 0.5, 6.0, 1, 0).require_geometry(), GeometryDomainError);
    try {
        FlowParams(5, 0.3, 4.0, 1, 1).require_geometry();
    } catch (const GeometryDomainError& e) {
        EXPECT_NE(std::string(e.what()).find("critical exponent"), std::string::npos);
    }
}

TEST(InitialProfile, ClosedFormExamples) {
    const FlowParams pure(5, 3.0 / 7.0, 4.0, 1.0, 0.0);
    for (double r : {1e-3, 0.5, 3.0, 1e2}) EXPECT_NEAR(initial_profile(pure, r), std::pow(r, -4.0), 1e-14 * std::pow(r, -4.0));
    EXPECT_NEAR(initial_profile(reference(), 1.0), std::pow(2.0, 7.0 / 3.0), 1e-14);
    // mpmath, 30 digits
    EXPECT_NEAR(initial_profile(FlowParams(5, 3.0 / 7.0, 4.0, 2.0, 1.0), 2.0), 2.2299669730612044519, 4e-15);
}

TEST(InitialProfile, RejectsNonPositiveRadius) {
    EXPECT_THROW(initial_profile(reference(), 0.0), ParameterError);
    EXPECT_THROW(initial_profile(reference(), -1.0), ParameterError);
}

TEST(InitialProfile, FiniteAtExtremeRadii) {
    const FlowParams p(5, 0.2, 10.0, 3.0, 1.0);
    const double v = initial_profile(p, 1e-6);
    EXPECT_TRUE(std::isfinite(v));
    EXPECT_NEAR(std::log(v), std::log(3.0) + 60.0 * std::log(10.0), 1e-12 * 140);
    EXPECT_NEAR(initial_profile_pow_m(reference(), 1.0), 2.0, 1e-14);
}

TEST(InitialProfile, StrictlyDecreasingForRandomParams) {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 3 + static_cast<int>(uni(rng) * 8);
        const double m = (0.05 + 0.9 * uni(rng)) * (n - 2.0) / n;
        const double lo = 2.0 / (1.0 - m), hi = (n - 2.0) / m;
        const double lam = lo + (0.05 + 0.9 * uni(rng)) * (hi - lo);
        const FlowParams p(n, m, lam, 0.1 + 3 * uni(rng), 3 * uni(rng));
        double prev = initial_profile(p, 1e-4);
        for (double r = 1.2e-4; r < 1e4; r *= 1.2) {
            const double v = initial_profile(p, r);
            ASSERT_LE(v, prev) << "n=" << n << " m=" << m << " lambda=" << lam << " r=" << r;
            ASSERT_GT(v, 0.0);
            prev = v;
        }
    }
}

TEST(InitialProfile, EndAsymptotics) {
    const FlowParams p(5, 3.0 / 7.0, 4.0, 2.0, 1.5);
    const double m = p.m(), ml = m * p.lambda();
    for (int k = 3; k <= 6; ++k) {
        const double r0 = std::pow(10.0, -k);
        const double tol0 = 10.0 * std::pow(p.c2() / p.c1(), m) * std::pow(r0, ml);
        EXPECT_NEAR(std::pow(r0, p.lambda()) * initial_profile(p, r0) / p.c1(), 1.0, tol0);
        const double r1 = std::pow(10.0, k);
        const double tol1 = 10.0 * std::pow(p.c1() / p.c2(), m) * std::pow(r1, -ml);
        EXPECT_NEAR(initial_profile(p, r1) / p.c2(), 1.0, tol1);
    }
}

TEST(Regularization, EpsilonWindow) {
    EXPECT_THROW(RegularizationConfig(0.0), ParameterError);
    EXPECT_THROW(RegularizationConfig(1.0), ParameterError);
    EXPECT_THROW(RegularizationConfig(-0.1), ParameterError);
    EXPECT_NO_THROW(RegularizationConfig(0.5));
}

TEST(Regularization, ValueAtOrigin) {
    const FlowParams p(5, 3.0 / 7.0, 4.0, 1.0, 0.0);
    // mpmath: (0.25^{-6/7} + 0.25)^{7/3}
    EXPECT_NEAR(regularized_initial(p, RegularizationConfig(0.25), 0.0), 18.990044718378185116, 3e-14);
    const FlowParams q = reference();
    const double eps = 0.1;
    const double expect = std::pow(std::pow(eps, -0.5 * q.m() * q.lambda()) + 1.0 + eps, 1.0 / q.m());
    EXPECT_NEAR(regularized_initial(q, RegularizationConfig(eps), 0.0), expect, 1e-13 * expect);
    EXPECT_THROW(regularized_initial(q, RegularizationConfig(eps), -1.0), ParameterError);
}

TEST(Regularization, ConvergesAtRateEpsilon) {
    const FlowParams p = reference();
    for (double r : {0.5, 1.0, 4.0}) {
        const double u = initial_profile(p, r);
        double prev = std::abs(regularized_initial(p, RegularizationConfig(0.004), r) - u);
        for (double eps = 0.002; eps > 1e-5; eps *= 0.5) {
            const double d = std::abs(regularized_initial(p, RegularizationConfig(eps), r) - u);
            EXPECT_NEAR(prev / d, 2.0, 0.05) << "r=" << r << " eps=" << eps;
            prev = d;
        }
    }
}

TEST(Regularization, FloorAndCeiling) {
    const FlowParams p = reference();
    for (double eps : {0.5, 0.1, 0.01}) {
        const RegularizationConfig rc(eps);
        const double top = regularized_initial(p, rc, 0.0);
        for (double r = 0.0; r < 50.0; r += 0.37) {
            const double v = regularized_initial(p, rc, r);
            EXPECT_GE(v, eps);
            EXPECT_LE(v, top * (1 + 1e-14));
        }
    }
}
