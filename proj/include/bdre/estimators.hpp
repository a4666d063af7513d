#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "bdre/bpre.hpp"
#include "bdre/env_exact.hpp"
#include "bdre/errors.hpp"
#include "bdre/model.hpp"
#include "bdre/parallel.hpp"
#include "bdre/params.hpp"
#include "bdre/rng.hpp"
#include "bdre/sde.hpp"
#include "bdre/specfun.hpp"
#include "bdre/stats.hpp"

namespace bdre {

/// Seed and parallelism for an ensemble. Replication i of an experiment
/// always draws from RngStream{seed, experiment stream}.substream(i), so
/// results do not depend on `threads`.
struct RunOptions {
    std::uint64_t seed = 1;
    unsigned threads = 0;  ///< 0: one per hardware thread
    std::size_t batch_size = 512;
};

/// Stream identifiers, one per sampled quantity.
namespace streams {
inline constexpr std::uint64_t kExtinctionPathwise = 101;
inline constexpr std::uint64_t kExtinctionRaoBlackwell = 102;
inline constexpr std::uint64_t kSurvivalHTransform = 201;
inline constexpr std::uint64_t kSurvivalNegatedAlpha = 202;
inline constexpr std::uint64_t kSurvivalReweighting = 203;
inline constexpr std::uint64_t kSurvivalReweightingEnv = 204;
inline constexpr std::uint64_t kSurvivalNegatedAlphaEnv = 205;
inline constexpr std::uint64_t kDecayCurve = 301;
inline constexpr std::uint64_t kMartingale = 401;
inline constexpr std::uint64_t kMartingaleCoupled = 402;
inline constexpr std::uint64_t kLaplace = 501;
inline constexpr std::uint64_t kEquivalenceConditioned = 601;
inline constexpr std::uint64_t kEquivalenceNegated = 602;
inline constexpr std::uint64_t kEquivalenceControl = 603;
inline constexpr std::uint64_t kDufresne = 701;
inline constexpr std::uint64_t kBridge = 801;
}  // namespace streams

namespace detail {

inline RngStream path_stream(const RunOptions& o, std::uint64_t experiment, std::size_t i) {
    return RngStream{o.seed, experiment}.substream(i);
}

/// Runs fn(i, acc) for i in [0, n) into k accumulators.
template <class Fn>
AccumulatorSet run_ensemble(std::size_t n, std::size_t k, const RunOptions& o, Fn&& fn) {
    return parallel_batches<AccumulatorSet>(
        n, o.batch_size, o.threads,
        [&](std::size_t lo, std::size_t hi) {
            AccumulatorSet acc(k);
            for (std::size_t i = lo; i < hi; ++i) fn(i, acc);
            return acc;
        },
        [](AccumulatorSet& total, const AccumulatorSet& part) { total.merge(part); });
}

/// Collects fn(i) for i in [0, n) in index order.
template <class Fn>
std::vector<double> collect_samples(std::size_t n, const RunOptions& o, Fn&& fn) {
    return parallel_batches<std::vector<double>>(
        n, o.batch_size, o.threads,
        [&](std::size_t lo, std::size_t hi) {
            std::vector<double> out;
            out.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) out.push_back(fn(i));
            return out;
        },
        [](std::vector<double>& total, const std::vector<double>& part) {
            total.insert(total.end(), part.begin(), part.end());
        });
}

/// Grid index of t; t must be a multiple of dt.
inline std::size_t step_of(double t, double dt) {
    const double k = std::round(t / dt);
    require(std::abs(k * dt - t) <= 1e-9 * std::max(1.0, t), "time is not on the simulation grid");
    return static_cast<std::size_t>(k);
}

inline void require_positive_count(std::size_t n) { require(n >= 1, "sample size must be >= 1"); }

inline MCEstimate exact_estimate(double value, std::size_t n, std::string tag) {
    return MCEstimate{value, 0.0, n, std::move(tag)};
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Extinction probability
// ---------------------------------------------------------------------------

enum class ExtinctionMethod { Pathwise, RaoBlackwell, ClosedForm };

inline std::string_view to_string(ExtinctionMethod m) {
    switch (m) {
        case ExtinctionMethod::Pathwise: return "pathwise";
        case ExtinctionMethod::RaoBlackwell: return "rao_blackwell";
        case ExtinctionMethod::ClosedForm: return "closed_form";
    }
    return "?";
}

/// P^z(Z extinct by `horizon`) (ClosedForm: P^z(Z_∞ = 0)).
/// Pathwise counts absorbed Euler paths; RaoBlackwell averages the exact
/// quenched probability exp(-z/I_horizon) over environments on cfg.dt.
inline MCEstimate estimate_extinction(const ModelParams& p, ExtinctionMethod method, std::size_t n,
                                      double horizon, const SchemeConfig& cfg,
                                      const RunOptions& o) {
    validate(p);
    detail::require(p.sigma_b > 0.0, "extinction estimation requires sigma_b > 0");
    detail::require_positive_count(n);
    detail::require(horizon > 0.0, "horizon must be positive");
    const std::string tag(to_string(method));
    if (method == ExtinctionMethod::ClosedForm) {
        detail::require(p.alpha > 0.0, "the closed form requires alpha > 0");
    }
    if (p.z0 == 0.0) return detail::exact_estimate(1.0, n, tag);

    SchemeConfig run = cfg;
    run.horizon = horizon;
    switch (method) {
        case ExtinctionMethod::ClosedForm:
            return detail::exact_estimate(extinction_probability(p.z0, p), n, tag);
        case ExtinctionMethod::RaoBlackwell: {
            auto acc = detail::run_ensemble(n, 1, o, [&](std::size_t i, AccumulatorSet& a) {
                double integral = 0.0;
                simulate_environment_observed(
                    p, run, detail::path_stream(o, streams::kExtinctionRaoBlackwell, i),
                    [&](std::size_t, double, double, double I) {
                        integral = I;
                        return true;
                    });
                a.items[0].add(quenched_extinction_from_integral(integral, p.z0));
            });
            return acc.items[0].estimate(tag);
        }
        case ExtinctionMethod::Pathwise: {
            auto acc = detail::run_ensemble(n, 1, o, [&](std::size_t i, AccumulatorSet& a) {
                bool absorbed = false;
                simulate_observed(ModelTag::Bdre, p, run,
                                  detail::path_stream(o, streams::kExtinctionPathwise, i),
                                  [&](std::size_t, double, double z, double) {
                                      absorbed = z == 0.0;
                                      return !absorbed;
                                  });
                a.items[0].add(absorbed ? 1.0 : 0.0);
            });
            return acc.items[0].estimate(tag);
        }
    }
    throw ConfigError("unknown extinction method");
}

// ---------------------------------------------------------------------------
// Survival conditioned on extinction
// ---------------------------------------------------------------------------

/// Routes to P^z(Z_t > 0 | Z_∞ = 0).
enum class SurvivalRoute {
    HTransformSim,             ///< (Ž, Š) simulated with the h-transformed drifts
    NegatedAlphaSim,           ///< BDRE with criticality -α
    Reweighting,               ///< E[U(Z_t) 1{Z_t > 0}]/U(z) over BDRE paths
    ReweightingEnvExact,       ///< as Reweighting, Z_t drawn from its quenched law
    NegatedAlphaRaoBlackwell,  ///< E[1 - exp(-z/I_t)] over environments with drift -α
};

inline std::string_view to_string(SurvivalRoute r) {
    switch (r) {
        case SurvivalRoute::HTransformSim: return "h_transform_sim";
        case SurvivalRoute::NegatedAlphaSim: return "negated_alpha_sim";
        case SurvivalRoute::Reweighting: return "reweighting";
        case SurvivalRoute::ReweightingEnvExact: return "reweighting_env_exact";
        case SurvivalRoute::NegatedAlphaRaoBlackwell: return "negated_alpha_rao_blackwell";
    }
    return "?";
}

inline MCEstimate estimate_conditioned_survival(const ModelParams& p, double t, SurvivalRoute route,
                                                std::size_t n, const SchemeConfig& cfg,
                                                const RunOptions& o) {
    validate(p);
    detail::require(p.alpha > 0.0, "conditioning on extinction requires alpha > 0");
    detail::require(p.sigma_e > 0.0 && p.sigma_b > 0.0, "requires sigma_e, sigma_b > 0");
    detail::require(p.z0 > 0.0, "requires z > 0");
    detail::require(t >= 0.0 && t <= cfg.horizon, "requires 0 <= t <= horizon");
    detail::require_positive_count(n);
    const std::string tag(to_string(route));
    if (t == 0.0) return detail::exact_estimate(1.0, n, tag);

    SchemeConfig run = cfg;
    run.horizon = t;
    run.stride = 1;
    const std::size_t last = detail::step_of(t, cfg.dt);
    const double u0 = scale_U(p.z0, p);

    // Z_t from the Euler engine for `tag`.
    auto z_at_t = [&](ModelTag model, const ModelParams& q, std::uint64_t stream, std::size_t i) {
        double zt = q.z0;
        simulate_observed(model, q, run, detail::path_stream(o, stream, i),
                          [&](std::size_t k, double, double z, double) {
                              zt = z;
                              return k < last && z > 0.0;
                          });
        return zt;
    };
    auto env_at_t = [&](const ModelParams& q, std::uint64_t stream, std::size_t i, double& s_t) {
        double integral = 0.0;
        simulate_environment_observed(q, run, detail::path_stream(o, stream, i),
                                      [&](std::size_t, double, double s, double I) {
                                          s_t = s;
                                          integral = I;
                                          return true;
                                      });
        return integral;
    };

    auto acc = detail::run_ensemble(n, 1, o, [&](std::size_t i, AccumulatorSet& a) {
        double value = 0.0;
        switch (route) {
            case SurvivalRoute::HTransformSim:
                value = z_at_t(ModelTag::ConditionedExtinction, p, streams::kSurvivalHTransform, i) > 0.0;
                break;
            case SurvivalRoute::NegatedAlphaSim:
                value = z_at_t(ModelTag::Bdre, p.with_alpha(-p.alpha), streams::kSurvivalNegatedAlpha,
                               i) > 0.0;
                break;
            case SurvivalRoute::Reweighting: {
                const double z = z_at_t(ModelTag::Bdre, p, streams::kSurvivalReweighting, i);
                value = z > 0.0 ? scale_U(z, p) / u0 : 0.0;
                break;
            }
            case SurvivalRoute::ReweightingEnvExact: {
                double s_t = 0.0;
                const RngStream rs = detail::path_stream(o, streams::kSurvivalReweightingEnv, i);
                const double integral = env_at_t(p, streams::kSurvivalReweightingEnv, i, s_t);
                Engine eng(rs.substream(1));
                const double z = sample_quenched_z(integral, s_t, p.z0, eng);
                value = z > 0.0 ? scale_U(z, p) / u0 : 0.0;
                break;
            }
            case SurvivalRoute::NegatedAlphaRaoBlackwell: {
                double s_t = 0.0;
                const double integral =
                    env_at_t(p.with_alpha(-p.alpha), streams::kSurvivalNegatedAlphaEnv, i, s_t);
                value = quenched_survival_from_integral(integral, p.z0);
                break;
            }
        }
        a.items[0].add(value);
    });
    return acc.items[0].estimate(tag);
}

// ---------------------------------------------------------------------------
// Decay rates
// ---------------------------------------------------------------------------

struct SurvivalCurvePoint {
    double t = 0.0;
    MCEstimate estimate;
};

/// P^z(Z_t > 0 | Z_∞ = 0) on a time grid from one set of environment paths.
///
/// The environment of the conditioned process is a Brownian motion with
/// drift μ = -α. Paths are drawn with drift ν = min(0, σ_e² - α) and
/// reweighted by the likelihood ratio
///   exp((μ - ν) S_t/σ_e² - (μ² - ν²) t/(2σ_e²)),
/// which moves samples onto the environments that keep the population alive.
/// ν = μ switches the tilt off.
inline std::vector<SurvivalCurvePoint> conditioned_survival_curve(const ModelParams& p,
                                                                  std::span<const double> t_grid,
                                                                  std::size_t n, double dt,
                                                                  const RunOptions& o,
                                                                  bool tilted = true) {
    validate(p);
    detail::require(p.alpha > 0.0 && p.sigma_e > 0.0 && p.sigma_b > 0.0 && p.z0 > 0.0,
                    "requires alpha, sigma_e, sigma_b, z > 0");
    detail::require(!t_grid.empty(), "time grid must be nonempty");
    detail::require_positive_count(n);
    std::vector<std::size_t> steps;
    double t_max = 0.0;
    for (double t : t_grid) {
        detail::require(t > 0.0, "grid times must be positive");
        steps.push_back(detail::step_of(t, dt));
        t_max = std::max(t_max, t);
    }
    const double ve = p.sigma_e * p.sigma_e;
    const double mu = -p.alpha;
    const double nu = tilted ? std::min(0.0, ve - p.alpha) : mu;
    const ModelParams sampling = p.with_alpha(nu);
    SchemeConfig run;
    run.dt = dt;
    run.horizon = t_max;
    const std::size_t k = t_grid.size();

    auto acc = detail::run_ensemble(n, k, o, [&](std::size_t i, AccumulatorSet& a) {
        simulate_environment_observed(
            sampling, run, detail::path_stream(o, streams::kDecayCurve, i),
            [&](std::size_t step, double t, double s, double integral) {
                for (std::size_t j = 0; j < k; ++j) {
                    if (steps[j] != step) continue;
                    const double log_lr =
                        (mu - nu) * s / ve - (mu * mu - nu * nu) * t / (2.0 * ve);
                    a.items[j].add(std::exp(log_lr) * quenched_survival_from_integral(integral, p.z0));
                }
                return true;
            });
    });
    std::vector<SurvivalCurvePoint> out;
    for (std::size_t j = 0; j < k; ++j) {
        out.push_back({t_grid[j], acc.items[j].estimate(tilted ? "tilted_rao_blackwell" : "rao_blackwell")});
    }
    return out;
}

/// Least-squares fit of log p̂(t) - power·log t = c - rate·t.
struct RateFit {
    double exponential_rate = 0.0;
    double polynomial_power = 0.0;  ///< preset by the regime
    double fit_rmse = 0.0;
    std::pair<double, double> t_window{0.0, 0.0};
    double log_level = 0.0;  ///< fitted c
    std::vector<SurvivalCurvePoint> points;  ///< accepted points
    std::vector<double> refused_times;
};

/// Fits points with relative std error <= max_relative_se; needs >= 4 of them.
inline RateFit fit_rate_from_points(std::span<const SurvivalCurvePoint> points, double power,
                                    double max_relative_se = 0.2) {
    RateFit fit;
    fit.polynomial_power = power;
    std::vector<double> x;
    std::vector<double> y;
    for (const auto& pt : points) {
        const auto& e = pt.estimate;
        if (!(e.mean > 0.0) || e.std_error > max_relative_se * e.mean) {
            fit.refused_times.push_back(pt.t);
            continue;
        }
        fit.points.push_back(pt);
        x.push_back(pt.t);
        y.push_back(std::log(e.mean) - power * std::log(pt.t));
    }
    if (x.size() < 4) {
        throw NumericalError("rate fit needs at least 4 resolvable time points, got " +
                             std::to_string(x.size()));
    }
    const LineFit line = fit_line(x, y);
    fit.exponential_rate = -line.slope;
    fit.log_level = line.intercept;
    fit.fit_rmse = line.rmse;
    fit.t_window = {*std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end())};
    return fit;
}

inline RateFit fit_decay_rate(const ModelParams& p, std::span<const double> t_grid,
                              std::size_t n_per_t, double dt, const RunOptions& o) {
    const DecayExponents ex = decay_exponents(p);
    const auto curve = conditioned_survival_curve(p, t_grid, n_per_t, dt, o, true);
    return fit_rate_from_points(curve, ex.power);
}

// ---------------------------------------------------------------------------
// Martingales
// ---------------------------------------------------------------------------

enum class MartingaleFunctional { U_of_Z, V_of_S, Z_over_expS };

inline constexpr std::array<MartingaleFunctional, 3> kAllMartingaleFunctionals{
    MartingaleFunctional::U_of_Z, MartingaleFunctional::V_of_S, MartingaleFunctional::Z_over_expS};

inline std::string_view to_string(MartingaleFunctional f) {
    switch (f) {
        case MartingaleFunctional::U_of_Z: return "U_of_Z";
        case MartingaleFunctional::V_of_S: return "V_of_S";
        case MartingaleFunctional::Z_over_expS: return "Z_over_expS";
    }
    return "?";
}

inline double evaluate(MartingaleFunctional f, double z, double s, const ModelParams& p) {
    switch (f) {
        case MartingaleFunctional::U_of_Z: return scale_U(z, p);
        case MartingaleFunctional::V_of_S: return scale_V(s, p);
        case MartingaleFunctional::Z_over_expS: return z * std::exp(-s);
    }
    return 0.0;
}

/// Value at (z, 0), the mean every checkpoint should reproduce.
inline double martingale_initial_value(MartingaleFunctional f, const ModelParams& p) {
    return evaluate(f, p.z0, 0.0, p);
}

/// Ensemble means of one functional of the BDRE at each checkpoint.
inline std::vector<MCEstimate> martingale_test(const ModelParams& p, MartingaleFunctional f,
                                               std::span<const double> checkpoints, std::size_t n,
                                               const SchemeConfig& cfg, const RunOptions& o) {
    validate(p);
    detail::require(p.sigma_e > 0.0, "martingale functionals require sigma_e > 0");
    detail::require_positive_count(n);
    std::vector<std::size_t> steps;
    double t_max = 0.0;
    for (double t : checkpoints) {
        detail::require(t >= 0.0, "checkpoints must be nonnegative");
        steps.push_back(detail::step_of(t, cfg.dt));
        t_max = std::max(t_max, t);
    }
    SchemeConfig run = cfg;
    run.horizon = std::max(t_max, cfg.dt);
    const std::size_t last = *std::max_element(steps.begin(), steps.end());
    auto acc = detail::run_ensemble(n, steps.size(), o, [&](std::size_t i, AccumulatorSet& a) {
        simulate_observed(ModelTag::Bdre, p, run, detail::path_stream(o, streams::kMartingale, i),
                          [&](std::size_t k, double, double z, double s) {
                              for (std::size_t j = 0; j < steps.size(); ++j) {
                                  if (steps[j] == k) a.items[j].add(evaluate(f, z, s, p));
                              }
                              return k < last;
                          });
    });
    std::vector<MCEstimate> out;
    for (auto& item : acc.items) out.push_back(item.estimate(std::string(to_string(f))));
    return out;
}

namespace detail {

/// BDRE paths at steps dt (coarse) and dt/2 (fine) driven by the same
/// Brownian motions: each coarse increment is the sum of two fine ones.
/// observe(level, step, z, s) with level 0 = coarse, 1 = fine.
template <class Observer>
void coupled_bdre_pair(const ModelParams& p, double dt, std::size_t coarse_steps, RngStream rng,
                       Scheme scheme, Observer&& observe) {
    NormalSource normal(rng);
    const double h = 0.5 * dt;
    const double sq = std::sqrt(h);
    const bool reflect = scheme == Scheme::EulerReflect;
    const double ve = p.sigma_e * p.sigma_e;
    struct State {
        double z;
        double s;
        bool absorbed;
    };
    auto advance = [&](State& x, double step, double dwe, double dwb) {
        if (x.absorbed) {
            x.s += p.alpha * step + p.sigma_e * dwe;
            return;
        }
        const double ds = p.alpha * step + p.sigma_e * dwe;
        double zn = x.z + 0.5 * ve * x.z * step + x.z * ds + p.sigma_b * std::sqrt(x.z) * dwb;
        zn = reflect ? std::abs(zn) : std::max(zn, 0.0);
        x.s += ds;
        if (p.sigma_b > 0.0 && zn <= 0.0) {
            zn = 0.0;
            x.absorbed = true;
        }
        x.z = zn;
    };
    State coarse{p.z0, 0.0, p.sigma_b > 0.0 && p.z0 == 0.0};
    State fine = coarse;
    observe(0, std::size_t{0}, coarse.z, coarse.s);
    observe(1, std::size_t{0}, fine.z, fine.s);
    for (std::size_t k = 1; k <= coarse_steps; ++k) {
        const double e1 = sq * normal();
        const double b1 = sq * normal();
        const double e2 = sq * normal();
        const double b2 = sq * normal();
        advance(fine, h, e1, b1);
        observe(1, 2 * k - 1, fine.z, fine.s);
        advance(fine, h, e2, b2);
        observe(1, 2 * k, fine.z, fine.s);
        advance(coarse, dt, e1 + e2, b1 + b2);
        observe(0, k, coarse.z, coarse.s);
    }
}

}  // namespace detail

/// Martingale means of all three functionals at dt and dt/2 on coupled paths.
struct MartingaleSuite {
    std::vector<double> checkpoints;
    double dt_coarse = 0.0;
    double dt_fine = 0.0;
    std::array<double, 3> initial{};
    std::array<std::vector<MCEstimate>, 3> coarse;  ///< indexed like kAllMartingaleFunctionals
    std::array<std::vector<MCEstimate>, 3> fine;
};

inline MartingaleSuite martingale_suite(const ModelParams& p, std::span<const double> checkpoints,
                                        std::size_t n, const SchemeConfig& cfg,
                                        const RunOptions& o) {
    validate(p);
    validate(cfg);
    detail::require(p.sigma_e > 0.0, "martingale functionals require sigma_e > 0");
    detail::require_positive_count(n);
    MartingaleSuite out;
    out.checkpoints.assign(checkpoints.begin(), checkpoints.end());
    out.dt_coarse = cfg.dt;
    out.dt_fine = 0.5 * cfg.dt;
    std::vector<std::size_t> steps;
    for (double t : checkpoints) steps.push_back(detail::step_of(t, cfg.dt));
    const std::size_t last = steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
    const std::size_t m = steps.size();
    // Accumulator layout: [level][functional][checkpoint].
    auto slot = [m](int level, std::size_t f, std::size_t j) {
        return (static_cast<std::size_t>(level) * 3 + f) * m + j;
    };
    auto acc = detail::run_ensemble(n, 2 * 3 * m, o, [&](std::size_t i, AccumulatorSet& a) {
        detail::coupled_bdre_pair(
            p, cfg.dt, last, detail::path_stream(o, streams::kMartingaleCoupled, i), cfg.scheme,
            [&](int level, std::size_t step, double z, double s) {
                const std::size_t coarse_step = level == 0 ? step : step / 2;
                if (level == 1 && step % 2 != 0) return;
                for (std::size_t j = 0; j < m; ++j) {
                    if (steps[j] != coarse_step) continue;
                    for (std::size_t f = 0; f < 3; ++f) {
                        a.items[slot(level, f, j)].add(evaluate(kAllMartingaleFunctionals[f], z, s, p));
                    }
                }
            });
    });
    for (std::size_t f = 0; f < 3; ++f) {
        const auto fn = kAllMartingaleFunctionals[f];
        out.initial[f] = martingale_initial_value(fn, p);
        for (std::size_t j = 0; j < m; ++j) {
            out.coarse[f].push_back(acc.items[slot(0, f, j)].estimate(std::string(to_string(fn))));
            out.fine[f].push_back(acc.items[slot(1, f, j)].estimate(std::string(to_string(fn))));
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Laplace transform of the martingale limit
// ---------------------------------------------------------------------------

enum class LaplaceMethod {
    Sampled,  ///< exp(-λ Z_t e^{-S_t}) with Z_t drawn from its quenched law
    Quenched  ///< exact conditional transform exp(-zλ/(1 + λ I_t)) per environment
};

struct LaplaceRow {
    double lambda = 0.0;
    MCEstimate empirical;
    double quadrature = 0.0;  ///< laplace_Y under the inverse-gamma reading
};

/// Empirical E[exp(-λ Z_t/e^{S_t})] at a large t against laplace_Y.
inline std::vector<LaplaceRow> laplace_limit_test(const ModelParams& p,
                                                  std::span<const double> lambda_grid,
                                                  double t_large, std::size_t n, double dt,
                                                  const RunOptions& o,
                                                  LaplaceMethod method = LaplaceMethod::Sampled,
                                                  const QuadratureConfig& q = {}) {
    validate(p);
    detail::require(p.alpha > 0.0 && p.sigma_e > 0.0 && p.sigma_b > 0.0,
                    "requires alpha, sigma_e, sigma_b > 0");
    detail::require(t_large > 0.0, "t must be positive");
    detail::require_positive_count(n);
    for (double l : lambda_grid) detail::require(l >= 0.0, "lambda must be nonnegative");
    SchemeConfig run;
    run.dt = dt;
    run.horizon = t_large;
    const std::size_t k = lambda_grid.size();
    auto acc = detail::run_ensemble(n, k, o, [&](std::size_t i, AccumulatorSet& a) {
        const RngStream rs = detail::path_stream(o, streams::kLaplace, i);
        double s_t = 0.0;
        double integral = 0.0;
        simulate_environment_observed(p, run, rs, [&](std::size_t, double, double s, double I) {
            s_t = s;
            integral = I;
            return true;
        });
        if (method == LaplaceMethod::Quenched) {
            for (std::size_t j = 0; j < k; ++j) {
                const double l = lambda_grid[j];
                const double v = std::isinf(l) ? quenched_extinction_from_integral(integral, p.z0)
                                               : std::exp(-p.z0 * l / (1.0 + l * integral));
                a.items[j].add(v);
            }
            return;
        }
        Engine eng(rs.substream(1));
        const double y = sample_quenched_z(integral, s_t, p.z0, eng) * std::exp(-s_t);
        for (std::size_t j = 0; j < k; ++j) {
            const double l = lambda_grid[j];
            double v = 1.0;
            if (l > 0.0) v = std::isinf(l) ? (y > 0.0 ? 0.0 : 1.0) : std::exp(-l * y);
            a.items[j].add(v);
        }
    });
    std::vector<LaplaceRow> rows;
    const std::string tag = method == LaplaceMethod::Sampled ? "sampled" : "quenched";
    for (std::size_t j = 0; j < k; ++j) {
        rows.push_back({lambda_grid[j], acc.items[j].estimate(tag),
                        laplace_Y(lambda_grid[j], p.z0, p, DufresneReading::InverseGamma, q)});
    }
    return rows;
}

// ---------------------------------------------------------------------------
// Distributional tests
// ---------------------------------------------------------------------------

struct EquivalenceReport {
    double t = 0.0;
    std::size_t n = 0;
    KsResult matched;  ///< Ž_t against Z_t with criticality -α
    KsResult control;  ///< Ž_t against Z_t with criticality +α
};

inline constexpr std::size_t kMinKsSample = 1000;

/// Samples Z_t of the given dynamics from independent streams.
inline std::vector<double> sample_marginal(ModelTag model, const ModelParams& p, double t,
                                           std::size_t n, const SchemeConfig& cfg,
                                           std::uint64_t stream, const RunOptions& o) {
    if (t == 0.0) return std::vector<double>(n, p.z0);
    SchemeConfig run = cfg;
    run.horizon = t;
    const std::size_t last = detail::step_of(t, cfg.dt);
    return detail::collect_samples(n, o, [&](std::size_t i) {
        double zt = p.z0;
        simulate_observed(model, p, run, detail::path_stream(o, stream, i),
                          [&](std::size_t k, double, double z, double) {
                              zt = z;
                              return k < last && !(z == 0.0 && p.sigma_b > 0.0);
                          });
        return zt;
    });
}

inline EquivalenceReport conditioned_law_equivalence_test(const ModelParams& p, double t,
                                                          std::size_t n, const SchemeConfig& cfg,
                                                          const RunOptions& o,
                                                          double level = 0.01) {
    validate(p);
    detail::require(p.alpha > 0.0, "conditioning on extinction requires alpha > 0");
    detail::require(n >= kMinKsSample, "KS tests need at least 1000 samples per side");
    detail::require(t >= 0.0, "t must be nonnegative");
    const auto conditioned = sample_marginal(ModelTag::ConditionedExtinction, p, t, n, cfg,
                                             streams::kEquivalenceConditioned, o);
    const auto negated = sample_marginal(ModelTag::Bdre, p.with_alpha(-p.alpha), t, n, cfg,
                                         streams::kEquivalenceNegated, o);
    const auto control =
        sample_marginal(ModelTag::Bdre, p, t, n, cfg, streams::kEquivalenceControl, o);
    EquivalenceReport r;
    r.t = t;
    r.n = n;
    r.matched = ks_two_sample(conditioned, negated, level);
    r.control = ks_two_sample(conditioned, control, level);
    return r;
}

struct DufresneReport {
    std::size_t n = 0;
    double horizon = 0.0;
    KsResult inverse_gamma;
    KsResult as_printed;
};

/// KS of truncated exponential functionals ∫_0^T e^{-S} against both readings.
inline DufresneReport dufresne_selection_test(const ModelParams& p, std::size_t n, double horizon,
                                              double dt, const RunOptions& o,
                                              double level = 0.01) {
    detail::require(n >= kMinKsSample, "KS tests need at least 1000 samples");
    const auto samples = detail::collect_samples(n, o, [&](std::size_t i) {
        return dufresne_functional(p, horizon, detail::path_stream(o, streams::kDufresne, i), dt).value;
    });
    DufresneReport r;
    r.n = n;
    r.horizon = horizon;
    r.inverse_gamma = ks_one_sample(
        samples, [&](double x) { return dufresne_cdf(x, p, DufresneReading::InverseGamma); }, level);
    r.as_printed = ks_one_sample(
        samples, [&](double x) { return dufresne_cdf(x, p, DufresneReading::AsPrinted); }, level);
    return r;
}

// ---------------------------------------------------------------------------
// Discrete-to-continuous bridge
// ---------------------------------------------------------------------------

/// Fraction of rescaled BPRE paths extinct by `horizon`; paths crossing the
/// escape level count as surviving.
inline MCEstimate bridge_extinction(const ModelParams& p, std::uint64_t n_scale,
                                    std::size_t replications, double horizon,
                                    const RunOptions& o) {
    validate(p);
    detail::require_positive_count(replications);
    const OffspringModel model = OffspringModel::matching(p, n_scale);
    auto acc = detail::run_ensemble(replications, 1, o, [&](std::size_t i, AccumulatorSet& a) {
        bool extinct = false;
        simulate_discrete_bpre_observed(n_scale, model, p, horizon,
                                        detail::path_stream(o, streams::kBridge, i),
                                        [&](std::uint64_t, double, double z, double) {
                                            extinct = z == 0.0;
                                            return !extinct;
                                        });
        a.items[0].add(extinct ? 1.0 : 0.0);
    });
    return acc.items[0].estimate("discrete_bpre");
}

}  // namespace bdre
