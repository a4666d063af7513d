#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <random>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>

#include "bdre/errors.hpp"
#include "bdre/params.hpp"
#include "bdre/rng.hpp"
#include "bdre/sde.hpp"

namespace bdre {

/// An environment realization S on a grid with the running exponential
/// functional I_t = (σ_b²/2) ∫_0^t e^{-S_u} du (trapezoid rule on the grid).
struct EnvPath {
    std::vector<double> times;
    std::vector<double> s_values;
    std::vector<double> i_values;
};

/// Streams (step, t, S_t, I_t) to `observe(...) -> bool`, t = 0 included.
/// Increments of S are exact Gaussians.
template <class Observer>
void simulate_environment_observed(const ModelParams& p, const SchemeConfig& cfg, RngStream rng,
                                   Observer&& observe) {
    validate(cfg);
    detail::require(std::isfinite(p.alpha), "alpha must be finite");
    detail::require(p.sigma_e > 0.0, "environment simulation requires sigma_e > 0");
    detail::require(p.sigma_b >= 0.0, "sigma_b must be nonnegative");
    NormalSource normal(rng);
    const double dt = cfg.dt;
    const double drift = p.alpha * dt;
    const double vol = p.sigma_e * std::sqrt(dt);
    const double weight = 0.25 * p.sigma_b * p.sigma_b * dt;  // (σ_b²/2)·(dt/2)
    double s = 0.0;
    double integral = 0.0;
    double e_prev = 1.0;
    if (!observe(std::size_t{0}, 0.0, s, integral)) return;
    const std::size_t n = cfg.steps();
    for (std::size_t k = 1; k <= n; ++k) {
        s += drift + vol * normal();
        const double e = std::exp(-s);
        integral += weight * (e_prev + e);
        e_prev = e;
        if (!observe(k, static_cast<double>(k) * dt, s, integral)) return;
    }
}

inline EnvPath simulate_environment(const ModelParams& p, const SchemeConfig& cfg,
                                    RngStream rng) {
    EnvPath env;
    const std::size_t n = cfg.steps() + 1;
    env.times.reserve(n);
    env.s_values.reserve(n);
    env.i_values.reserve(n);
    simulate_environment_observed(p, cfg, rng, [&](std::size_t, double t, double s, double i) {
        env.times.push_back(t);
        env.s_values.push_back(s);
        env.i_values.push_back(i);
        return true;
    });
    return env;
}

/// Grid index of time t; throws if t is not on the grid.
inline std::size_t grid_index(const EnvPath& env, double t) {
    detail::require(!env.times.empty(), "empty environment path");
    const double dt = env.times.size() > 1 ? env.times[1] - env.times[0] : 1.0;
    const double k = std::round(t / dt);
    detail::require(k >= 0.0 && k < static_cast<double>(env.times.size()),
                    "time is outside the environment grid");
    const auto idx = static_cast<std::size_t>(k);
    detail::require(std::abs(env.times[idx] - t) <= 1e-9 * std::max(1.0, std::abs(t)),
                    "time is not on the environment grid");
    return idx;
}

/// P(Z_t = 0 | environment) = exp(-z/I_t), with c/0 = ∞ for c > 0.
inline double quenched_extinction_from_integral(double integral, double z) {
    detail::require(z >= 0.0, "z must be nonnegative");
    if (z == 0.0) return 1.0;
    if (integral <= 0.0) return 0.0;
    return std::exp(-z / integral);
}

/// P(Z_t > 0 | environment) = 1 - exp(-z/I_t), accurate when it is tiny.
inline double quenched_survival_from_integral(double integral, double z) {
    detail::require(z >= 0.0, "z must be nonnegative");
    if (z == 0.0) return 0.0;
    if (integral <= 0.0) return 1.0;
    return -std::expm1(-z / integral);
}

inline double quenched_extinct_by(const EnvPath& env, double t, double z) {
    return quenched_extinction_from_integral(env.i_values[grid_index(env, t)], z);
}

/// Exact draw of Z_t given the environment: Z_t e^{-S_t} is compound
/// Poisson with N ~ Poisson(z/I_t) exponential jumps of mean I_t, i.e.
/// Gamma(N, scale I_t) with an atom at 0 of mass exp(-z/I_t).
inline double sample_quenched_z(double integral, double s_t, double z, Engine& eng) {
    detail::require(z >= 0.0, "z must be nonnegative");
    if (z == 0.0) return 0.0;
    if (integral <= 0.0) return z;  // t = 0
    std::poisson_distribution<long long> jumps(z / integral);
    const long long count = jumps(eng);
    if (count == 0) return 0.0;
    std::gamma_distribution<double> mass(static_cast<double>(count), integral);
    return std::exp(s_t) * mass(eng);
}

inline double sample_z_given_env(const EnvPath& env, double t, double z, Engine& eng) {
    const std::size_t k = grid_index(env, t);
    return sample_quenched_z(env.i_values[k], env.s_values[k], z, eng);
}

inline double sample_z_given_env(const EnvPath& env, double t, double z, RngStream rng) {
    Engine eng(rng);
    return sample_z_given_env(env, t, z, eng);
}

// ---------------------------------------------------------------------------
// Exponential functional of drifted Brownian motion
// ---------------------------------------------------------------------------

struct DufresneSample {
    double value = 0.0;  ///< ∫_0^T exp(-α u - σ_e W_u) du, trapezoid rule
    /// E[∫_T^∞ ... | W_T] = e^{-(αT + σ_e W_T)}/(α - σ_e²/2); +∞ when α <= σ_e²/2.
    double expected_tail = 0.0;
};

inline DufresneSample dufresne_functional(const ModelParams& p, double horizon, RngStream rng,
                                          double dt = 1e-2) {
    detail::require(p.alpha > 0.0, "the exponential functional diverges unless alpha > 0");
    detail::require(p.sigma_e > 0.0, "sigma_e must be positive");
    // I_t with σ_b² = 2 is exactly ∫ e^{-S}.
    ModelParams unit = p;
    unit.sigma_b = std::sqrt(2.0);
    SchemeConfig cfg;
    cfg.dt = dt;
    cfg.horizon = horizon;
    double last_s = 0.0;
    DufresneSample out;
    simulate_environment_observed(unit, cfg, rng, [&](std::size_t, double, double s, double i) {
        last_s = s;
        out.value = i;
        return true;
    });
    const double rate = p.alpha - 0.5 * p.sigma_e * p.sigma_e;
    out.expected_tail = rate > 0.0 ? std::exp(-last_s) / rate
                                   : std::numeric_limits<double>::infinity();
    return out;
}

/// CDF of the exponential functional under either reading.
inline double dufresne_cdf(double x, const ModelParams& p, DufresneReading reading) {
    if (x <= 0.0) return 0.0;
    const double b = p.beta();
    const double ve = p.sigma_e * p.sigma_e;
    if (reading == DufresneReading::AsPrinted) {
        return boost::math::gamma_p(b, ve * x / 2.0);
    }
    return boost::math::gamma_q(b, 2.0 / (ve * x));
}

}  // namespace bdre
