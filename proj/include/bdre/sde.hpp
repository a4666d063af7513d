#pragma once

#include <cmath>
#include <cstddef>
#include <optional>
#include <string_view>
#include <vector>

#include "bdre/errors.hpp"
#include "bdre/model.hpp"
#include "bdre/params.hpp"
#include "bdre/rng.hpp"

namespace bdre {

enum class Scheme {
    /// max(Z, 0) inside drift and square root, post-step state clamped at 0.
    EulerFullTruncation,
    /// post-step state replaced by its absolute value.
    EulerReflect,
};

struct SchemeConfig {
    double dt = 1e-3;
    double horizon = 1.0;
    Scheme scheme = Scheme::EulerFullTruncation;
    /// Z at or below this value (after the step) is absorbed when σ_b > 0.
    double absorption_threshold = 0.0;
    /// Keep every stride-th grid point in stored paths (the last is always kept).
    std::size_t stride = 1;

    [[nodiscard]] std::size_t steps() const {
        const auto n = static_cast<long long>(std::llround(horizon / dt));
        return n < 1 ? 1 : static_cast<std::size_t>(n);
    }
    friend bool operator==(const SchemeConfig&, const SchemeConfig&) = default;
};

inline void validate(const SchemeConfig& c) {
    detail::require(std::isfinite(c.dt) && c.dt > 0.0, "dt must be positive");
    detail::require(std::isfinite(c.horizon) && c.horizon > 0.0, "horizon must be positive");
    detail::require(c.dt <= c.horizon * (1.0 + 1e-12), "dt must not exceed the horizon");
    detail::require(c.absorption_threshold >= 0.0, "absorption_threshold must be >= 0");
    detail::require(c.stride >= 1, "stride must be >= 1");
}

/// Which diffusion generated a path.
enum class ModelTag {
    Bdre,                          ///< unconditioned (Z, S)
    ConditionedExtinction,         ///< (Ž, Š), conditioned on Z_∞ = 0
    ConditionedSurvival,           ///< (Ẑ, Ŝ), conditioned on Z_∞ > 0
    QuenchedUnconditioned,         ///< one-dimensional Z, drift α + σ_e²/2
    QuenchedConditionedExtinction, ///< one-dimensional Ž, drift σ_e²/2 - α
    QuenchedConditionedSurvival,   ///< one-dimensional Ẑ
    DiscreteBpre,                  ///< rescaled branching process in random environment
};

inline std::string_view to_string(ModelTag m) {
    switch (m) {
        case ModelTag::Bdre: return "bdre";
        case ModelTag::ConditionedExtinction: return "conditioned-extinction";
        case ModelTag::ConditionedSurvival: return "conditioned-survival";
        case ModelTag::QuenchedUnconditioned: return "quenched-unconditioned";
        case ModelTag::QuenchedConditionedExtinction: return "quenched-extinction";
        case ModelTag::QuenchedConditionedSurvival: return "quenched-survival";
        case ModelTag::DiscreteBpre: return "discrete-bpre";
    }
    return "unknown";
}

/// One realization on a uniform grid. For the one-dimensional variants
/// s_values holds the environment noise σ_e W_e(t).
struct Path {
    std::vector<double> times;
    std::vector<double> z_values;
    std::vector<double> s_values;
    std::optional<double> absorbed_at;  ///< first grid time with z = 0
    std::optional<double> escaped_at;   ///< discrete BPRE only: time the escape level was crossed
    ModelTag model_tag = ModelTag::Bdre;
};

namespace detail {

/// Euler-Maruyama for dZ = drift_z dt + Z dS + σ_b sqrt(Z) dW_b,
/// dS = drift_s dt + σ_e dW_e with a single W_e increment feeding both
/// coordinates. `drift(z) -> DriftPair`. `observe(step, t, z, s) -> bool`
/// is called at every grid point, including t = 0; returning false stops.
///
/// With `guard_zero` a step landing at or below 0 is discarded and the
/// interval is covered by two half steps with fresh noise, recursively, at
/// most kMaxHalvings deep.
template <class Drift, class Observer>
void euler_two_dimensional(const ModelParams& p, const SchemeConfig& cfg, RngStream rng,
                           Drift&& drift, bool guard_zero, Observer&& observe) {
    constexpr int kMaxHalvings = 20;
    NormalSource normal(rng);
    const double sigma_e = p.sigma_e;
    const double sigma_b = p.sigma_b;
    const bool absorbing = sigma_b > 0.0 && !guard_zero;
    const bool reflect = cfg.scheme == Scheme::EulerReflect;

    double z = p.z0;
    double s = 0.0;
    bool absorbed = absorbing && z <= cfg.absorption_threshold;
    if (absorbed) z = 0.0;
    if (!observe(std::size_t{0}, 0.0, z, s)) return;

    auto propose = [&](double z_now, double h, double& ds_out) {
        const double sq = std::sqrt(h);
        const double dwe = sq * normal();
        const double dwb = sq * normal();
        const double zp = z_now > 0.0 ? z_now : 0.0;
        const DriftPair d = drift(zp);
        ds_out = d.drift_s * h + sigma_e * dwe;
        return z_now + d.drift_z * h + zp * ds_out + sigma_b * std::sqrt(zp) * dwb;
    };

    // Recursive halving for the conditioned-on-survival dynamics.
    auto guarded = [&](auto& self, double h, int depth) -> void {
        double ds = 0.0;
        const double z_new = propose(z, h, ds);
        if (z_new > 0.0) {
            z = z_new;
            s += ds;
            return;
        }
        if (depth >= kMaxHalvings) {
            throw NumericalError("step halving exhausted near z = 0");
        }
        self(self, 0.5 * h, depth + 1);
        self(self, 0.5 * h, depth + 1);
    };

    const std::size_t n = cfg.steps();
    const double dt = cfg.dt;
    for (std::size_t k = 1; k <= n; ++k) {
        if (absorbed) {
            // Z stays at 0; the environment keeps moving. Both noises are
            // still drawn so the S path does not depend on the absorption time.
            const double dwe = std::sqrt(dt) * normal();
            (void)normal();
            s += drift(0.0).drift_s * dt + sigma_e * dwe;
        } else if (guard_zero) {
            guarded(guarded, dt, 0);
        } else {
            double ds = 0.0;
            double z_new = propose(z, dt, ds);
            z_new = reflect ? std::abs(z_new) : (z_new > 0.0 ? z_new : 0.0);
            s += ds;
            if (absorbing && z_new <= cfg.absorption_threshold) {
                z_new = 0.0;
                absorbed = true;
            }
            z = z_new;
        }
        if (!observe(k, static_cast<double>(k) * dt, z, s)) return;
    }
}

/// Collects a Path from observer callbacks.
struct PathRecorder {
    Path path;
    std::size_t stride = 1;
    std::size_t last_step = 0;

    bool operator()(std::size_t step, double t, double z, double s) {
        if (z == 0.0 && !path.absorbed_at) path.absorbed_at = t;
        if (step % stride == 0 || step == last_step) {
            path.times.push_back(t);
            path.z_values.push_back(z);
            path.s_values.push_back(s);
        }
        return true;
    }
};

inline void validate_dynamics(ModelTag tag, const ModelParams& p) {
    validate(p);
    switch (tag) {
        case ModelTag::Bdre:
        case ModelTag::QuenchedUnconditioned:
            break;
        case ModelTag::ConditionedExtinction:
        case ModelTag::QuenchedConditionedExtinction:
            require(p.alpha > 0.0, "conditioning on extinction requires alpha > 0");
            require(p.sigma_e > 0.0, "conditioning on extinction requires sigma_e > 0");
            break;
        case ModelTag::ConditionedSurvival:
        case ModelTag::QuenchedConditionedSurvival:
            require(p.alpha > 0.0, "conditioning on survival requires alpha > 0");
            require(p.sigma_e > 0.0, "conditioning on survival requires sigma_e > 0");
            require(p.z0 > 0.0, "conditioning on survival requires z0 > 0");
            break;
        case ModelTag::DiscreteBpre:
            throw ConfigError("discrete BPRE is simulated by simulate_discrete_bpre");
    }
}

}  // namespace detail

/// Runs one path of the chosen diffusion and reports every grid point to
/// `observe(step, t, z, s) -> bool`. No path storage; this is what the
/// ensemble estimators use.
template <class Observer>
void simulate_observed(ModelTag tag, const ModelParams& p, const SchemeConfig& cfg,
                       RngStream rng, Observer&& observe) {
    validate(cfg);
    detail::validate_dynamics(tag, p);
    const double ve = p.sigma_e * p.sigma_e;
    const double a = p.alpha;
    // σ_b = 0: U(0) is infinite, survival is certain and the correction vanishes.
    const bool survival_correction = p.sigma_b > 0.0;

    switch (tag) {
        case ModelTag::Bdre:
            detail::euler_two_dimensional(
                p, cfg, rng, [&](double z) { return h_transform_drift(z, p, 0.0); }, false,
                observe);
            return;
        case ModelTag::ConditionedExtinction:
            detail::euler_two_dimensional(
                p, cfg, rng, [&](double z) { return h_transform_drift(z, p, -2.0 * a); }, false,
                observe);
            return;
        case ModelTag::ConditionedSurvival:
            detail::euler_two_dimensional(
                p, cfg, rng,
                [&](double z) {
                    return survival_correction ? drift_conditioned_survival(z, p)
                                               : h_transform_drift(z, p, 0.0);
                },
                true, observe);
            return;
        case ModelTag::QuenchedUnconditioned:
            detail::euler_two_dimensional(
                p, cfg, rng, [&](double z) { return DriftPair{(a + 0.5 * ve) * z, 0.0}; }, false,
                observe);
            return;
        case ModelTag::QuenchedConditionedExtinction:
            detail::euler_two_dimensional(
                p, cfg, rng, [&](double z) { return DriftPair{(0.5 * ve - a) * z, 0.0}; }, false,
                observe);
            return;
        case ModelTag::QuenchedConditionedSurvival:
            detail::euler_two_dimensional(
                p, cfg, rng,
                [&](double z) {
                    const double corr =
                        survival_correction ? 2.0 * a * survival_correction_ratio(z, p) : 0.0;
                    return DriftPair{(0.5 * ve + a + corr) * z, 0.0};
                },
                true, observe);
            return;
        case ModelTag::DiscreteBpre:
            break;
    }
    throw ConfigError("unsupported model tag");
}

/// Simulates and stores one path.
inline Path simulate_path(ModelTag tag, const ModelParams& p, const SchemeConfig& cfg,
                          RngStream rng) {
    detail::PathRecorder rec;
    rec.stride = cfg.stride;
    rec.last_step = cfg.steps();
    rec.path.model_tag = tag;
    const std::size_t kept = cfg.steps() / cfg.stride + 2;
    rec.path.times.reserve(kept);
    rec.path.z_values.reserve(kept);
    rec.path.s_values.reserve(kept);
    simulate_observed(tag, p, cfg, rng, rec);
    return std::move(rec.path);
}

/// The unconditioned BDRE.
inline Path simulate_bdre(const ModelParams& p, const SchemeConfig& cfg, RngStream rng) {
    return simulate_path(ModelTag::Bdre, p, cfg, rng);
}

/// The BDRE conditioned on eventual extinction, as a two-dimensional diffusion.
inline Path simulate_conditioned_extinction(const ModelParams& p, const SchemeConfig& cfg,
                                            RngStream rng) {
    return simulate_path(ModelTag::ConditionedExtinction, p, cfg, rng);
}

/// The BDRE conditioned on survival. Never absorbed; steps that would
/// reach 0 are retried with halved step size.
inline Path simulate_conditioned_survival(const ModelParams& p, const SchemeConfig& cfg,
                                          RngStream rng) {
    return simulate_path(ModelTag::ConditionedSurvival, p, cfg, rng);
}

enum class QuenchedVariant { Unconditioned, ConditionedExtinction, ConditionedSurvival };

inline ModelTag tag_of(QuenchedVariant v) {
    switch (v) {
        case QuenchedVariant::Unconditioned: return ModelTag::QuenchedUnconditioned;
        case QuenchedVariant::ConditionedExtinction: return ModelTag::QuenchedConditionedExtinction;
        case QuenchedVariant::ConditionedSurvival: return ModelTag::QuenchedConditionedSurvival;
    }
    return ModelTag::QuenchedUnconditioned;
}

/// Drift coefficient c(z) of the one-dimensional form dZ = c(z) Z dt + ...
inline double quenched_drift_coefficient(QuenchedVariant v, double z, const ModelParams& p) {
    const double ve = p.sigma_e * p.sigma_e;
    switch (v) {
        case QuenchedVariant::Unconditioned: return p.alpha + 0.5 * ve;
        case QuenchedVariant::ConditionedExtinction: return 0.5 * ve - p.alpha;
        case QuenchedVariant::ConditionedSurvival:
            return 0.5 * ve + p.alpha + 2.0 * p.alpha * survival_correction_ratio(z, p);
    }
    return 0.0;
}

/// One-dimensional population dynamics with the environment substituted in.
/// `p.alpha` may be negative for the unconditioned variant.
inline Path simulate_quenched(const ModelParams& p, QuenchedVariant variant,
                              const SchemeConfig& cfg, RngStream rng) {
    return simulate_path(tag_of(variant), p, cfg, rng);
}

// ---------------------------------------------------------------------------
// Path functionals
// ---------------------------------------------------------------------------

/// Pointwise U(Z_t), V(S_t) and Z_t e^{-S_t}.
struct PathFunctionals {
    std::vector<double> times;
    std::vector<double> u_of_z;
    std::vector<double> v_of_s;
    std::vector<double> z_over_exp_s;
};

inline PathFunctionals path_functionals(const Path& path, const ModelParams& p) {
    detail::require(path.times.size() == path.z_values.size() &&
                        path.times.size() == path.s_values.size(),
                    "path columns must be aligned");
    PathFunctionals f;
    f.times = path.times;
    const std::size_t n = path.times.size();
    f.u_of_z.resize(n);
    f.v_of_s.resize(n);
    f.z_over_exp_s.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        f.u_of_z[i] = scale_U(path.z_values[i], p);
        f.v_of_s[i] = scale_V(path.s_values[i], p);
        f.z_over_exp_s[i] = path.z_values[i] * std::exp(-path.s_values[i]);
    }
    return f;
}

}  // namespace bdre
