#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "bdre/errors.hpp"
#include "bdre/params.hpp"
#include "bdre/rng.hpp"
#include "bdre/sde.hpp"

namespace bdre {

/// Offspring law of the discrete branching process in random environment.
///
/// Generation k draws a mean m_k = exp(X_k), X_k ~ N(log_mean_mean,
/// log_mean_sd²), i.i.d. over k. Given m, each individual has no children with
/// probability 1 - q and otherwise 1 + G children, G geometric on {0, 1, ...}
/// with mean r - 1. Choosing r = (v + m² + m)/(2m) and q = m/r gives mean m
/// and variance v. Outside the feasible range of m the law saturates at
/// q = 1 (or r = 1) and the variance drifts away from v.
struct OffspringModel {
    double log_mean_mean = 0.0;
    double log_mean_sd = 0.0;
    double offspring_variance = 1.0;
    /// Rescaled population Z/n at which a path counts as escaped to infinity.
    double escape_level = 1e6;

    /// The law whose rescaled process approaches the BDRE with parameters p.
    static OffspringModel matching(const ModelParams& p, std::uint64_t n) {
        const double nn = static_cast<double>(n);
        return OffspringModel{p.alpha / nn, p.sigma_e / std::sqrt(nn), p.sigma_b * p.sigma_b, 1e6};
    }
};

inline void validate(const OffspringModel& m) {
    detail::require(std::isfinite(m.log_mean_mean) && std::isfinite(m.log_mean_sd) &&
                        m.log_mean_sd >= 0.0,
                    "offspring log-mean law must have finite mean and sd");
    detail::require(std::isfinite(m.offspring_variance) && m.offspring_variance > 0.0,
                    "offspring variance must be finite and positive");
    detail::require(m.escape_level > 0.0, "escape level must be positive");
}

/// (q, r) of the zero-modified geometric law with mean m.
struct ZeroModifiedGeometric {
    double q = 1.0;  ///< probability of at least one child
    double r = 1.0;  ///< mean number of children given at least one

    static ZeroModifiedGeometric with_mean(double m, double variance) {
        ZeroModifiedGeometric law;
        law.r = (variance + m * m + m) / (2.0 * m);
        if (law.r < 1.0) law.r = 1.0;
        law.q = m / law.r;
        if (law.q > 1.0) {
            law.q = 1.0;
            law.r = m;
        }
        return law;
    }
    [[nodiscard]] double mean() const { return q * r; }
    [[nodiscard]] double variance() const { return q * r * (2.0 * r - 1.0) - mean() * mean(); }
};

namespace detail {

/// Children of `parents` individuals under the law with mean m.
inline std::int64_t next_generation(std::int64_t parents, double m, double variance, Engine& eng) {
    if (parents <= 0) return 0;
    const auto law = ZeroModifiedGeometric::with_mean(m, variance);
    std::binomial_distribution<std::int64_t> breeders(parents, law.q);
    const std::int64_t k = breeders(eng);
    if (k == 0 || law.r <= 1.0) return k;
    std::negative_binomial_distribution<std::int64_t> extra(k, 1.0 / law.r);
    return k + extra(eng);
}

}  // namespace detail

/// Runs generations 0..⌊horizon·n⌋ and reports the rescaled state
/// (k/n, Z_k/n, Σ_{i<k} log m_i) to `observe(k, t, z, s) -> bool`.
/// Returns through `escaped` whether the escape level was crossed.
template <class Observer>
void simulate_discrete_bpre_observed(std::uint64_t n, const OffspringModel& model,
                                     const ModelParams& p, double horizon, RngStream rng,
                                     Observer&& observe, bool* escaped = nullptr) {
    detail::require(n >= 1, "scaling level n must be >= 1");
    validate(model);
    validate(p);
    detail::require(horizon > 0.0, "horizon must be positive");
    const double nn = static_cast<double>(n);
    const auto generations = static_cast<std::uint64_t>(std::floor(horizon * nn));
    Engine eng(rng);
    NormalSource env(rng.substream(0));

    auto count = static_cast<std::int64_t>(std::llround(p.z0 * nn));
    double s = 0.0;
    if (escaped) *escaped = false;
    if (!observe(std::uint64_t{0}, 0.0, static_cast<double>(count) / nn, s)) return;
    for (std::uint64_t k = 1; k <= generations; ++k) {
        const double log_m = model.log_mean_mean + model.log_mean_sd * env();
        count = detail::next_generation(count, std::exp(log_m), model.offspring_variance, eng);
        s += log_m;
        const double z = static_cast<double>(count) / nn;
        if (!observe(k, static_cast<double>(k) / nn, z, s)) return;
        if (z >= model.escape_level) {
            if (escaped) *escaped = true;
            return;
        }
    }
}

/// The rescaled path (Z_⌊tn⌋/n, S_⌊tn⌋/sqrt(n)). A path that crosses the
/// escape level stops there with escaped_at set.
inline Path simulate_discrete_bpre(std::uint64_t n, const OffspringModel& model,
                                   const ModelParams& p, double horizon, RngStream rng) {
    Path path;
    path.model_tag = ModelTag::DiscreteBpre;
    bool escaped = false;
    simulate_discrete_bpre_observed(
        n, model, p, horizon, rng,
        [&](std::uint64_t, double t, double z, double s) {
            path.times.push_back(t);
            path.z_values.push_back(z);
            path.s_values.push_back(s);
            if (z == 0.0 && !path.absorbed_at) path.absorbed_at = t;
            return true;
        },
        &escaped);
    if (escaped) path.escaped_at = path.times.back();
    return path;
}

/// Branching in a given environment: log_means[k] is log m for the step from
/// generation k to k + 1. Returns Z_k/n for k = 0..log_means.size().
inline std::vector<double> simulate_bpre_in_environment(std::uint64_t n,
                                                        std::span<const double> log_means,
                                                        double offspring_variance, double z0,
                                                        RngStream rng) {
    detail::require(n >= 1, "scaling level n must be >= 1");
    detail::require(std::isfinite(offspring_variance) && offspring_variance > 0.0,
                    "offspring variance must be finite and positive");
    const double nn = static_cast<double>(n);
    Engine eng(rng);
    auto count = static_cast<std::int64_t>(std::llround(z0 * nn));
    std::vector<double> out;
    out.reserve(log_means.size() + 1);
    out.push_back(static_cast<double>(count) / nn);
    for (double lm : log_means) {
        count = detail::next_generation(count, std::exp(lm), offspring_variance, eng);
        out.push_back(static_cast<double>(count) / nn);
    }
    return out;
}

}  // namespace bdre
