#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "bdre/sde.hpp"
#include "bdre/stats.hpp"

using namespace bdre;

namespace {

SchemeConfig grid(double dt, double horizon) {
    SchemeConfig c;
    c.dt = dt;
    c.horizon = horizon;
    return c;
}

}  // namespace

TEST(SchemeConfig, StepsAndValidation) {
    EXPECT_EQ(grid(0.1, 1.0).steps(), 10u);
    EXPECT_EQ(grid(0.3, 1.0).steps(), 3u);
    EXPECT_THROW(validate(grid(0.5, 0.1)), ConfigError);
    SchemeConfig bad = grid(0.0, 1.0);
    EXPECT_THROW(validate(bad), ConfigError);
    bad = grid(0.1, 1.0);
    bad.stride = 0;
    EXPECT_THROW(validate(bad), ConfigError);
}

TEST(Simulate, SameStreamGivesIdenticalPaths) {
    const ModelParams p;
    const auto a = simulate_bdre(p, grid(1e-2, 2.0), RngStream{5, 9});
    const auto b = simulate_bdre(p, grid(1e-2, 2.0), RngStream{5, 9});
    const auto c = simulate_bdre(p, grid(1e-2, 2.0), RngStream{5, 10});
    EXPECT_EQ(a.z_values, b.z_values);
    EXPECT_EQ(a.s_values, b.s_values);
    EXPECT_NE(a.s_values, c.s_values);
    EXPECT_EQ(a.model_tag, ModelTag::Bdre);
}

TEST(Simulate, DeterministicLimitWithoutNoise) {
    // σ_e = σ_b = 0: dZ = αZ dt, so Euler gives z(1 + α dt)^n.
    const ModelParams p{0.8, 0.0, 0.0, 2.0};
    const auto path = simulate_bdre(p, grid(1e-3, 1.0), RngStream{1, 1});
    EXPECT_NEAR(path.z_values.back(), 2.0 * std::pow(1.0 + 0.8e-3, 1000), 1e-9);
    EXPECT_NEAR(path.s_values.back(), 0.8, 1e-12);
    EXPECT_NEAR(path.z_values.back(), 2.0 * std::exp(0.8), 2e-3);
}

TEST(Simulate, PathsStayNonnegativeAndAbsorbed) {
    const ModelParams p{-0.5, 1.0, 2.0, 0.5};  // subcritical, dies quickly
    for (auto scheme : {Scheme::EulerFullTruncation, Scheme::EulerReflect}) {
        SchemeConfig cfg = grid(1e-2, 5.0);
        cfg.scheme = scheme;
        for (std::uint64_t i = 0; i < 50; ++i) {
            const auto path = simulate_bdre(p, cfg, RngStream{3, i});
            EXPECT_TRUE(std::all_of(path.z_values.begin(), path.z_values.end(), [](double z) { return z >= 0.0; }));
            if (scheme == Scheme::EulerFullTruncation && path.absorbed_at) {
                const auto k = static_cast<std::size_t>(std::llround(*path.absorbed_at / cfg.dt));
                for (std::size_t j = k; j < path.z_values.size(); ++j) EXPECT_EQ(path.z_values[j], 0.0);
                EXPECT_GT(path.z_values[k - 1], 0.0);
            }
        }
    }
}

TEST(Simulate, StartAtZeroIsAbsorbedImmediately) {
    const ModelParams p{1.0, 1.0, 1.0, 0.0};
    const auto path = simulate_bdre(p, grid(1e-2, 1.0), RngStream{1, 2});
    ASSERT_TRUE(path.absorbed_at.has_value());
    EXPECT_EQ(*path.absorbed_at, 0.0);
    EXPECT_EQ(path.z_values.back(), 0.0);
    EXPECT_NE(path.s_values.back(), 0.0);  // the environment keeps moving
}

TEST(Simulate, StrideKeepsLastPoint) {
    SchemeConfig cfg = grid(1e-2, 1.0);
    cfg.stride = 30;
    const auto path = simulate_bdre(ModelParams{}, cfg, RngStream{2, 2});
    EXPECT_DOUBLE_EQ(path.times.front(), 0.0);
    EXPECT_NEAR(path.times.back(), 1.0, 1e-12);
    EXPECT_EQ(path.times.size(), 5u);  // 0, 0.3, 0.6, 0.9, 1.0
}

TEST(Simulate, QuenchedFormMatchesTwoDimensionalBdre) {
    // Substituting dS into dZ gives the same recursion up to rounding.
    const ModelParams p{0.7, 0.9, 1.1, 1.5};
    const auto cfg = grid(1e-3, 1.0);
    const auto two_d = simulate_bdre(p, cfg, RngStream{8, 1});
    const auto one_d = simulate_quenched(p, QuenchedVariant::Unconditioned, cfg, RngStream{8, 1});
    ASSERT_EQ(two_d.z_values.size(), one_d.z_values.size());
    for (std::size_t i = 0; i < two_d.z_values.size(); ++i) {
        EXPECT_NEAR(two_d.z_values[i], one_d.z_values[i], 1e-9 * (1.0 + two_d.z_values[i]));
    }
}

TEST(Simulate, ConditionedExtinctionPopulationMatchesNegatedAlpha) {
    // Ž has total drift (σ_e²/2 - α)z, the drift of the -α BDRE.
    const ModelParams p{0.6, 1.0, 1.0, 1.0};
    const auto cfg = grid(1e-3, 1.0);
    const auto cond = simulate_conditioned_extinction(p, cfg, RngStream{4, 4});
    const auto neg = simulate_bdre(p.with_alpha(-0.6), cfg, RngStream{4, 4});
    for (std::size_t i = 0; i < cond.z_values.size(); ++i) {
        EXPECT_NEAR(cond.z_values[i], neg.z_values[i], 1e-9 * (1.0 + neg.z_values[i]));
    }
    // The environments differ: Š has a state-dependent drift.
    EXPECT_NE(cond.s_values.back(), neg.s_values.back());
}

TEST(Simulate, ConditionedSurvivalNeverHitsZero) {
    const ModelParams p{0.5, 1.0, 1.5, 0.05};
    for (std::uint64_t i = 0; i < 100; ++i) {
        const auto path = simulate_conditioned_survival(p, grid(1e-2, 2.0), RngStream{6, i});
        EXPECT_FALSE(path.absorbed_at.has_value());
        EXPECT_TRUE(std::all_of(path.z_values.begin(), path.z_values.end(), [](double z) { return z > 0.0; }));
    }
}

TEST(Simulate, ConditionedSurvivalWithoutBranchingNoiseIsUnconditioned) {
    const ModelParams p{0.5, 1.0, 0.0, 1.0};
    const auto cfg = grid(1e-2, 1.0);
    const auto a = simulate_conditioned_survival(p, cfg, RngStream{1, 7});
    const auto b = simulate_bdre(p, cfg, RngStream{1, 7});
    for (std::size_t i = 0; i < a.z_values.size(); ++i) EXPECT_NEAR(a.z_values[i], b.z_values[i], 1e-12);
}

TEST(Simulate, EnvironmentMeanAndVarianceAreExact) {
    const ModelParams p{0.4, 1.3, 1.0, 1.0};
    MeanAccumulator s_mean;
    for (std::uint64_t i = 0; i < 4000; ++i) {
        const auto path = simulate_bdre(p, grid(5e-2, 1.0), RngStream{11, i});
        s_mean.add(path.s_values.back());
    }
    EXPECT_NEAR(s_mean.mean(), 0.4, 4.0 * s_mean.std_error());
    EXPECT_NEAR(s_mean.variance(), 1.69, 0.1);
}

TEST(Simulate, RejectsInvalidDynamics) {
    EXPECT_THROW(simulate_conditioned_extinction(ModelParams{0.0, 1.0, 1.0, 1.0}, grid(1e-2, 1.0), RngStream{}),
                 ConfigError);
    EXPECT_THROW(simulate_bdre(ModelParams{1.0, -1.0, 1.0, 1.0}, grid(1e-2, 1.0), RngStream{}), ConfigError);
    EXPECT_THROW(simulate_path(ModelTag::DiscreteBpre, ModelParams{}, grid(1e-2, 1.0), RngStream{}), ConfigError);
}

TEST(PathFunctionals, InitialValues) {
    const ModelParams p;
    const auto path = simulate_bdre(p, grid(1e-2, 0.5), RngStream{1, 1});
    const auto f = path_functionals(path, p);
    EXPECT_DOUBLE_EQ(f.u_of_z.front(), 0.25);
    EXPECT_DOUBLE_EQ(f.v_of_s.front(), 1.0);
    EXPECT_DOUBLE_EQ(f.z_over_exp_s.front(), 1.0);
    EXPECT_EQ(f.times.size(), path.times.size());
}

TEST(ModelTag, Names) {
    EXPECT_EQ(to_string(ModelTag::Bdre), "bdre");
    EXPECT_EQ(to_string(ModelTag::ConditionedExtinction), "conditioned-extinction");
}
