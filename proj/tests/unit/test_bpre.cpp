#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "bdre/bpre.hpp"
#include "bdre/stats.hpp"

using namespace bdre;

TEST(ZeroModifiedGeometric, MatchesMeanAndVariance) {
    for (double m : {0.8, 0.95, 1.0, 1.1, 1.25}) {
        for (double v : {0.5, 1.0, 4.0}) {
            const auto law = ZeroModifiedGeometric::with_mean(m, v);
            EXPECT_NEAR(law.mean(), m, 1e-12) << m << " " << v;
            EXPECT_NEAR(law.variance(), v, 1e-12) << m << " " << v;
            EXPECT_GE(law.q, 0.0);
            EXPECT_LE(law.q, 1.0);
            EXPECT_GE(law.r, 1.0);
        }
    }
}

TEST(ZeroModifiedGeometric, SaturatesButKeepsMean) {
    const auto law = ZeroModifiedGeometric::with_mean(3.0, 0.1);
    EXPECT_DOUBLE_EQ(law.q, 1.0);
    EXPECT_DOUBLE_EQ(law.mean(), 3.0);
    EXPECT_NE(law.variance(), 0.1);
}

TEST(NextGeneration, EmpiricalMomentsPerIndividual) {
    Engine eng(RngStream{3, 0});
    MeanAccumulator acc;
    for (int i = 0; i < 200000; ++i) {
        acc.add(static_cast<double>(detail::next_generation(1, 1.1, 2.0, eng)));
    }
    EXPECT_NEAR(acc.mean(), 1.1, 4.0 * acc.std_error());
    EXPECT_NEAR(acc.variance(), 2.0, 0.05);
    EXPECT_EQ(detail::next_generation(0, 1.1, 2.0, eng), 0);
}

TEST(OffspringModel, MatchingScales) {
    const ModelParams p{2.0, 1.5, 0.7, 1.0};
    const auto m = OffspringModel::matching(p, 100);
    EXPECT_DOUBLE_EQ(m.log_mean_mean, 0.02);
    EXPECT_DOUBLE_EQ(m.log_mean_sd, 0.15);
    EXPECT_DOUBLE_EQ(m.offspring_variance, 0.49);
    OffspringModel bad = m;
    bad.offspring_variance = 0.0;
    EXPECT_THROW(validate(bad), ConfigError);
}

TEST(DiscreteBpre, RescaledPathShapeAndDeterminism) {
    const ModelParams p;
    const auto model = OffspringModel::matching(p, 50);
    const auto a = simulate_discrete_bpre(50, model, p, 2.0, RngStream{1, 3});
    const auto b = simulate_discrete_bpre(50, model, p, 2.0, RngStream{1, 3});
    EXPECT_EQ(a.z_values, b.z_values);
    EXPECT_EQ(a.model_tag, ModelTag::DiscreteBpre);
    EXPECT_DOUBLE_EQ(a.z_values.front(), 1.0);
    if (!a.escaped_at) {
        EXPECT_EQ(a.times.size(), 101u);
        EXPECT_DOUBLE_EQ(a.times.back(), 2.0);
    }
}

TEST(DiscreteBpre, EscapeStopsThePath) {
    const ModelParams p{5.0, 0.1, 0.5, 1.0};
    auto model = OffspringModel::matching(p, 20);
    model.escape_level = 10.0;
    const auto path = simulate_discrete_bpre(20, model, p, 50.0, RngStream{2, 0});
    ASSERT_TRUE(path.escaped_at.has_value());
    EXPECT_GE(path.z_values.back(), 10.0);
    EXPECT_LT(path.times.back(), 50.0);
}

TEST(DiscreteBpre, ExtinctionFrequencyApproachesDiffusionLimit) {
    // Diffusion limit: (1 + σ_e² z/σ_b²)^{-β} = 0.25 at the standard set.
    const ModelParams p;
    const std::uint64_t n = 100;
    const auto model = OffspringModel::matching(p, n);
    MeanAccumulator dead;
    for (std::uint64_t i = 0; i < 3000; ++i) {
        bool extinct = false;
        simulate_discrete_bpre_observed(n, model, p, 20.0, RngStream{17, i},
                                        [&](std::uint64_t, double, double z, double) {
                                            extinct = z == 0.0;
                                            return !extinct;
                                        });
        dead.add(extinct ? 1.0 : 0.0);
    }
    EXPECT_NEAR(dead.mean(), 0.25, 3.0 * dead.std_error() + 0.01);
}

TEST(BpreInEnvironment, CriticalEnvironmentPreservesMean) {
    const std::vector<double> env(50, 0.0);
    MeanAccumulator last;
    for (std::uint64_t i = 0; i < 2000; ++i) {
        const auto z = simulate_bpre_in_environment(10, env, 1.0, 1.0, RngStream{4, i});
        ASSERT_EQ(z.size(), 51u);
        last.add(z.back());
    }
    EXPECT_NEAR(last.mean(), 1.0, 4.0 * last.std_error());
}

TEST(BpreInEnvironment, RejectsBadArguments) {
    const std::vector<double> env(3, 0.0);
    EXPECT_THROW(simulate_bpre_in_environment(0, env, 1.0, 1.0, RngStream{}), ConfigError);
    EXPECT_THROW(simulate_bpre_in_environment(5, env, -1.0, 1.0, RngStream{}), ConfigError);
}
