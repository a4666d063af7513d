#include <gtest/gtest.h>

#include <cmath>

#include "bdre/model.hpp"
#include "bdre/params.hpp"
#include "support.hpp"

using namespace bdre;

TEST(Params, RegimeBoundariesUseExactComparisons) {
    ModelParams p;
    EXPECT_EQ(classify_regime(p.with_alpha(2.0)), Regime::StronglySupercritical);
    EXPECT_EQ(classify_regime(p.with_alpha(1.0)), Regime::IntermediateSupercritical);
    EXPECT_EQ(classify_regime(p.with_alpha(0.5)), Regime::WeaklySupercritical);
    EXPECT_EQ(classify_regime(p.with_alpha(0.0)), Regime::Critical);
    EXPECT_EQ(classify_regime(p.with_alpha(-0.5)), Regime::WeaklySubcritical);
    EXPECT_EQ(classify_regime(p.with_alpha(-1.0)), Regime::IntermediateSubcritical);
    EXPECT_EQ(classify_regime(p.with_alpha(-3.0)), Regime::StronglySubcritical);
    EXPECT_EQ(classify_regime(p.with_alpha(std::nextafter(1.0, 2.0))), Regime::StronglySupercritical);
    p.sigma_e = 0.0;
    EXPECT_THROW(classify_regime(p), ConfigError);
}

TEST(Params, ValidationRejectsBadValues) {
    ModelParams p;
    EXPECT_NO_THROW(validate(p));
    p.sigma_e = -1.0;
    EXPECT_THROW(validate(p), ConfigError);
    p = ModelParams{};
    p.alpha = std::nan("");
    EXPECT_THROW(validate(p), ConfigError);
    p = ModelParams{};
    p.sigma_b = 0.0;
    p.z0 = 0.0;
    EXPECT_THROW(validate(p), ConfigError);
}

TEST(Params, BetaIsTwoAlphaOverVariance) {
    ModelParams p{3.0, 2.0, 1.0, 1.0};
    EXPECT_DOUBLE_EQ(p.beta(), 1.5);
}

TEST(ScaleFunctions, ClosedFormsAtTheStandardSet) {
    const ModelParams p;
    EXPECT_DOUBLE_EQ(scale_U(1.0, p), 0.25);
    EXPECT_DOUBLE_EQ(scale_U(0.0, p), 1.0);
    EXPECT_DOUBLE_EQ(scale_V(0.0, p), 1.0);
    EXPECT_NEAR(scale_V(1.0, p), std::exp(-2.0), 1e-15);
}

TEST(ScaleFunctions, PreconditionsAreEnforced) {
    ModelParams p;
    EXPECT_THROW(scale_U(-1.0, p), ConfigError);
    p.sigma_b = 0.0;
    EXPECT_THROW(scale_U(0.0, p), ConfigError);
    EXPECT_NO_THROW(scale_U(1.0, p));
    p = ModelParams{};
    p.sigma_e = 0.0;
    EXPECT_THROW(scale_U(1.0, p), ConfigError);
    EXPECT_THROW(scale_V(1.0, p), ConfigError);
}

TEST(ExtinctionProbability, MatchesScaleFunctionRatio) {
    const ModelParams p;
    EXPECT_DOUBLE_EQ(extinction_probability(1.0, p), 0.25);
    EXPECT_DOUBLE_EQ(extinction_probability(0.0, p), 1.0);
    const ModelParams q{0.7, 1.3, 0.4, 1.0};
    for (double z : {0.01, 0.5, 3.0, 40.0}) {
        EXPECT_NEAR(extinction_probability(z, q), scale_U(z, q) / scale_U(0.0, q),
                    1e-13 * scale_U(z, q) / scale_U(0.0, q));
    }
    EXPECT_THROW(extinction_probability(1.0, p.with_alpha(0.0)), ConfigError);
    EXPECT_THROW(extinction_probability(1.0, p.with_alpha(-1.0)), ConfigError);
}

TEST(ExtinctionProbability, DecreasesInZ) {
    const ModelParams p{0.3, 0.8, 1.2, 1.0};
    double prev = 1.0;
    for (double z = 0.1; z < 50.0; z *= 1.7) {
        const double q = extinction_probability(z, p);
        EXPECT_LT(q, prev);
        prev = q;
    }
}

TEST(SurvivalCorrection, StableForSmallZ) {
    const ModelParams p;
    // U(z)/(U(0) - U(z)) ~ σ_b²/(β σ_e² z) as z → 0.
    for (double z : {1e-6, 1e-9, 1e-12}) {
        const double r = survival_correction_ratio(z, p);
        EXPECT_NEAR(r * z * p.beta(), 1.0, 5e-6);
    }
    EXPECT_NEAR(survival_correction_ratio(1.0, p), 0.25 / 0.75, 1e-14);
    EXPECT_THROW(survival_correction_ratio(0.0, p), ConfigError);
}

TEST(Generator, AnalyticJetsMatchFiniteDifferences) {
    const ModelParams p{0.6, 1.1, 0.9, 1.0};
    for (double z : {0.2, 1.0, 3.5}) {
        const double s = 0.3;
        const Jet u = scale_U_jet(z, s, p);
        const Jet u_fd =
            test_support::finite_difference_jet([&](double zz, double) { return scale_U(zz, p); }, z, s);
        EXPECT_NEAR(u.f_z, u_fd.f_z, 1e-6 * std::abs(u.f_z));
        EXPECT_NEAR(u.f_zz, u_fd.f_zz, 1e-4 * std::abs(u.f_zz));
        const Jet v = scale_V_jet(z, s, p);
        const Jet v_fd =
            test_support::finite_difference_jet([&](double, double ss) { return scale_V(ss, p); }, z, s);
        EXPECT_NEAR(v.f_s, v_fd.f_s, 1e-6 * std::abs(v.f_s));
        EXPECT_NEAR(v.f_ss, v_fd.f_ss, 1e-4 * std::abs(v.f_ss));
    }
}

TEST(Generator, ScaleFunctionsAreHarmonic) {
    for (double a : {-1.5, -0.2, 0.4, 1.0, 2.5}) {
        const ModelParams p{a, 0.9, 1.3, 1.0};
        for (double z : {0.0, 0.05, 1.0, 7.0}) {
            const auto gu = generator_terms(scale_U_jet(z, 0.0, p), z, p);
            const auto gv = generator_terms(scale_V_jet(z, -1.0, p), z, p);
            EXPECT_LE(std::abs(gu.sum()), 1e-12 * std::max(gu.magnitude(), 1e-300));
            EXPECT_LE(std::abs(gv.sum()), 1e-12 * gv.magnitude());
        }
    }
}

TEST(Generator, FiniteDifferenceHarmonicityForProductFunction) {
    // U(z)·V(s) is not harmonic in general: the covariation term survives.
    const ModelParams p;
    auto f = [&](double z, double s) { return scale_U(z, p) * scale_V(s, p); };
    const double z = 1.0;
    const double s = 0.0;
    const Jet j = test_support::finite_difference_jet(f, z, s);
    const double expected = p.sigma_e * p.sigma_e * z * scale_U_jet(z, s, p).f_z * scale_V_jet(z, s, p).f_s;
    EXPECT_NEAR(generator_apply(j, z, s, p), expected, 1e-5);
}

TEST(Generator, CallableOverloadAgreesWithJet) {
    const ModelParams p;
    auto jet = [&](double z, double s) { return scale_U_jet(z, s, p); };
    EXPECT_DOUBLE_EQ(generator_apply(jet, 2.0, 0.0, p), generator_apply(scale_U_jet(2.0, 0.0, p), 2.0, 0.0, p));
    // f(z) = z has generator (α + σ_e²/2) z.
    Jet lin;
    lin.f = 2.0;
    lin.f_z = 1.0;
    EXPECT_DOUBLE_EQ(generator_apply(lin, 2.0, 0.0, p), 3.0);
}

TEST(Drifts, HTransformWithZeroCorrectionIsTheBdre) {
    const ModelParams p{0.7, 1.2, 0.8, 1.0};
    const auto d = h_transform_drift(2.0, p, 0.0);
    EXPECT_DOUBLE_EQ(d.drift_z, 0.5 * 1.44 * 2.0);
    EXPECT_DOUBLE_EQ(d.drift_s, 0.7);
}

TEST(Drifts, ConditionedOnExtinctionHasNegatedTotalDrift) {
    const ModelParams p{0.9, 1.1, 0.6, 1.0};
    const double ve = p.sigma_e * p.sigma_e;
    for (double z : {0.0, 0.3, 2.0, 10.0}) {
        const auto d = drift_conditioned_extinction(z, p);
        EXPECT_NEAR(d.total_drift_z(z), (0.5 * ve - p.alpha) * z, 1e-13 * (1.0 + z));
    }
    // At z = 0 the environment keeps its drift α; far away it approaches -α.
    EXPECT_DOUBLE_EQ(drift_conditioned_extinction(0.0, p).drift_s, p.alpha);
    EXPECT_NEAR(drift_conditioned_extinction(1e9, p).drift_s, -p.alpha, 1e-8);
    EXPECT_THROW(drift_conditioned_extinction(1.0, p.with_alpha(0.0)), ConfigError);
}

TEST(Drifts, ConditionedOnSurvivalEnvironmentDriftRange) {
    const ModelParams p;
    // Limits: α + σ_e² as z → 0 and α as z → ∞.
    EXPECT_NEAR(drift_conditioned_survival(1e-8, p).drift_s, 2.0, 1e-7);
    EXPECT_NEAR(drift_conditioned_survival(1e8, p).drift_s, 1.0, 1e-7);
    const ModelParams q{0.4, 1.5, 0.7, 1.0};
    for (double z : {1e-6, 0.01, 1.0, 100.0}) {
        const double ds = drift_conditioned_survival(z, q).drift_s;
        EXPECT_GT(ds, q.alpha);
        EXPECT_LT(ds, q.alpha + q.sigma_e * q.sigma_e);
    }
    EXPECT_THROW(drift_conditioned_survival(1.0, ModelParams{1.0, 1.0, 0.0, 1.0}), ConfigError);
}

TEST(Drifts, SurvivalCorrectionTotalDriftMatchesFormula) {
    const ModelParams p;
    const double z = 0.5;
    const auto d = drift_conditioned_survival(z, p);
    const double c = 2.0 * p.alpha * survival_correction_ratio(z, p);
    EXPECT_NEAR(d.total_drift_z(z), (0.5 + 1.0 + c) * z, 1e-13);
}
