#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "bdre/oracles.hpp"
#include "bdre/quadrature.hpp"
#include "bdre/specfun.hpp"

using namespace bdre;

namespace {

const double kInvSqrt2Pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);

}  // namespace

TEST(Quadrature, FiniteIntervals) {
    EXPECT_NEAR(integrate([](double x) { return x * x * x; }, 0.0, 2.0).value, 4.0, 1e-13);
    EXPECT_NEAR(integrate([](double x) { return std::sqrt(x); }, 0.0, 1.0).value, 2.0 / 3.0, 1e-10);
    EXPECT_NEAR(integrate([](double x) { return std::sin(x); }, 0.0, std::numbers::pi).value, 2.0, 1e-13);
    EXPECT_EQ(integrate([](double) { return 1.0; }, 1.0, 1.0).value, 0.0);
}

TEST(Quadrature, InfiniteIntervalsUnderBothMaps) {
    for (auto map : {InfiniteDomainMap::ExpSubstitution, InfiniteDomainMap::TanSubstitution}) {
        const auto q = QuadratureConfig{}.with_map(map);
        EXPECT_NEAR(integrate_to_infinity([](double x) { return std::exp(-x); }, 0.0, q).value, 1.0, 1e-10);
        EXPECT_NEAR(integrate_to_infinity([](double x) { return std::exp(-x * x); }, 0.0, q).value,
                    0.5 * std::sqrt(std::numbers::pi), 1e-10);
    }
    const auto tan = QuadratureConfig{}.with_map(InfiniteDomainMap::TanSubstitution);
    EXPECT_NEAR(integrate_to_infinity([](double x) { return 1.0 / (1.0 + x * x); }, 0.0, tan).value,
                0.5 * std::numbers::pi, 1e-10);
}

TEST(Quadrature, BudgetExhaustionIsReported) {
    QuadratureConfig q;
    q.max_subdivisions = 2;
    EXPECT_THROW(integrate([](double x) { return std::sin(1.0 / x); }, 1e-4, 1.0, q), NumericalError);
    q.rel_tol = 0.0;
    EXPECT_THROW(validate(q), ConfigError);
}

TEST(GammaLaw, DensityIntegratesToOneAndMean) {
    const QuadratureConfig q;
    for (double nu : {0.3, 0.5, 1.0, 2.0, 5.5}) {
        EXPECT_NEAR(gamma_expectation(nu, [](double) { return 1.0; }, q), 1.0, 1e-9) << nu;
        EXPECT_NEAR(gamma_expectation(nu, [](double x) { return x; }, q), nu, 1e-8 * nu) << nu;
    }
    const GammaLaw g(2.0);
    EXPECT_NEAR(g.density(1.0), std::exp(-1.0), 1e-15);
    EXPECT_NEAR(g.cdf(1.0), 1.0 - 2.0 * std::exp(-1.0), 1e-15);
    EXPECT_EQ(g.density(-1.0), 0.0);
    EXPECT_THROW(GammaLaw(0.0), ConfigError);
}

TEST(Psi, QuadratureMatchesClosedForm) {
    for (double a : {1e-3, 0.1, 0.5, 1.0, 3.0, 10.0, 50.0}) {
        EXPECT_NEAR(psi(a), psi_closed_form(a), 1e-10 * psi_closed_form(a)) << a;
    }
    // e^{-1}/sqrt(2π)
    EXPECT_NEAR(psi(1.0), 0.14676266317373993, 1e-12);
}

TEST(Psi, FirstMomentIsInverseSqrtTwoPi) {
    EXPECT_NEAR(integral_a_psi(QuadratureConfig{}, PsiRoute::Quadrature), kInvSqrt2Pi, 1e-9);
    EXPECT_NEAR(integral_a_psi(QuadratureConfig{}, PsiRoute::ClosedForm), kInvSqrt2Pi, 1e-9);
}

TEST(PhiBeta, MatchesTensorOracleAndReferenceValues) {
    struct Case {
        double a, beta, reference;
    };
    // Reference values from independent 50-digit quadrature.
    const Case cases[] = {{0.5, 0.5, 2.1029072758941207},
                          {1.0, 1.0, 0.099116661733501375},
                          {2.0, 2.0, 0.0012192800784167863},
                          {0.5, 2.0, 0.22331735440850910}};
    for (const auto& c : cases) {
        const double v = phi_beta(c.a, c.beta);
        EXPECT_NEAR(v, c.reference, 1e-6 * c.reference) << c.a << " " << c.beta;
        EXPECT_NEAR(v, oracle::phi_beta_tensor(c.a, c.beta), 1e-8 * c.reference) << c.a << " " << c.beta;
    }
}

TEST(PhiBeta, RejectsOutOfDomain) {
    EXPECT_THROW(phi_beta(0.0, 1.0), ConfigError);
    EXPECT_THROW(phi_beta(1.0, 0.0), ConfigError);
}

TEST(MeanInverseGamma, FiniteAndInfinite) {
    EXPECT_DOUBLE_EQ(mean_inverse_gamma(2.0).value, 1.0);
    EXPECT_NEAR(mean_inverse_gamma(3.5).value, oracle::mean_inverse_gamma(3.5), 1e-13);
    EXPECT_FALSE(mean_inverse_gamma(1.0).is_finite());
    EXPECT_FALSE(mean_inverse_gamma(0.4).is_finite());
    EXPECT_THROW(mean_inverse_gamma(0.0), ConfigError);
    EXPECT_EQ((0.0 * ExtendedReal::infinity()).value, 0.0);
    EXPECT_FALSE((2.0 * ExtendedReal::infinity()).is_finite());
    EXPECT_EQ(ExtendedReal::infinity().str(), "inf");
}

TEST(LaplaceY, EdgeCases) {
    const ModelParams p;
    for (auto r : {DufresneReading::AsPrinted, DufresneReading::InverseGamma}) {
        EXPECT_EQ(laplace_Y(0.0, 1.0, p, r), 1.0);
        EXPECT_EQ(laplace_Y(2.0, 0.0, p, r), 1.0);
    }
    const double inf = std::numeric_limits<double>::infinity();
    EXPECT_NEAR(laplace_Y(inf, 1.0, p, DufresneReading::InverseGamma), 0.25, 1e-10);
    EXPECT_NEAR(laplace_Y(inf, 1.0, p, DufresneReading::InverseGamma), oracle::laplace_limit_inverse_gamma(1.0, p),
                1e-10);
    EXPECT_NEAR(laplace_Y(inf, 1.0, p, DufresneReading::AsPrinted), oracle::laplace_limit_as_printed(1.0, p), 1e-10);
    EXPECT_NEAR(laplace_Y(1e6, 1.0, p, DufresneReading::InverseGamma), 0.25, 1e-4);
    EXPECT_THROW(laplace_Y(-1.0, 1.0, p, DufresneReading::InverseGamma), ConfigError);
    EXPECT_THROW(laplace_Y(1.0, 1.0, p.with_alpha(-1.0), DufresneReading::InverseGamma), ConfigError);
}

TEST(LaplaceY, MonotoneAndReferenceValues) {
    const ModelParams p;
    const double lambdas[] = {0.5, 1.0, 2.0, 10.0};
    // E[exp(-1/(1/G_2 + 1/λ))] for G_2 ~ Gamma(2), from independent quadrature.
    const double reference[] = {0.6960631, 0.5594181, 0.4347117, 0.2888636};
    double prev = 1.0;
    for (int i = 0; i < 4; ++i) {
        const double v = laplace_Y(lambdas[i], 1.0, p, DufresneReading::InverseGamma);
        EXPECT_NEAR(v, reference[i], 1e-7);
        EXPECT_LT(v, prev);
        prev = v;
    }
}

TEST(DecayExponents, PerRegime) {
    const auto weak = decay_exponents(ModelParams{0.5, 1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(weak.rate, 0.125);
    EXPECT_DOUBLE_EQ(weak.power, -1.5);
    const auto inter = decay_exponents(ModelParams{1.0, 1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(inter.rate, 0.5);
    EXPECT_DOUBLE_EQ(inter.power, -0.5);
    const auto strong = decay_exponents(ModelParams{2.0, 1.0, 1.0, 1.0});
    EXPECT_DOUBLE_EQ(strong.rate, 1.5);
    EXPECT_DOUBLE_EQ(strong.power, 0.0);
    EXPECT_THROW(decay_exponents(ModelParams{-1.0, 1.0, 1.0, 1.0}), ConfigError);
}

TEST(DecayConstant, IntermediateAndStrong) {
    const ModelParams inter{1.0, 1.0, 1.0, 1.0};
    const auto c = theorem1_constant(inter, Regime::IntermediateSupercritical, 1.0);
    ASSERT_TRUE(c.is_finite());
    EXPECT_NEAR(c.value, 2.0 * kInvSqrt2Pi, 1e-9);

    const ModelParams strong{2.0, 1.0, 1.0, 1.0};
    EXPECT_NEAR(theorem1_constant(strong, Regime::StronglySupercritical, 1.0).value, 1.0, 1e-14);
    EXPECT_NEAR(theorem1_constant(strong, Regime::StronglySupercritical, 1.0, {}, DufresneReading::InverseGamma).value,
                2.0, 1e-14);
    EXPECT_NEAR(theorem1_constant(strong, Regime::StronglySupercritical, 3.0).value, 3.0, 1e-14);
    // ν = 2(α/σ_e² - 1) <= 1 for α <= 1.5σ_e²: E[1/G_ν] diverges.
    const ModelParams edge{1.4, 1.0, 1.0, 1.0};
    EXPECT_FALSE(theorem1_constant(edge, Regime::StronglySupercritical, 1.0).is_finite());
}

TEST(DecayConstant, Refusals) {
    const ModelParams weak{0.5, 1.0, 1.0, 1.0};
    EXPECT_THROW(theorem1_constant(weak, Regime::WeaklySupercritical, 1.0), NotComputable);
    EXPECT_THROW(theorem1_constant(weak, Regime::StronglySupercritical, 1.0), ConfigError);
    EXPECT_THROW(theorem1_constant(ModelParams{2.0, 1.0, 0.0, 1.0}, Regime::StronglySupercritical, 1.0), ConfigError);
    EXPECT_THROW(theorem1_constant(ModelParams{2.0, 1.0, 1.0, 1.0}, Regime::StronglySupercritical, 0.0), ConfigError);
}

TEST(Oracles, BesselAsPrintedLimitAtBetaOne) {
    const ModelParams p{0.5, 1.0, 1.0, 1.0};
    EXPECT_NEAR(oracle::laplace_limit_as_printed(1.0, p), 2.0 * std::cyl_bessel_k(1.0, 2.0), 1e-14);
    EXPECT_NEAR(laplace_Y(std::numeric_limits<double>::infinity(), 1.0, p, DufresneReading::AsPrinted),
                0.2797317636330, 1e-9);
}
