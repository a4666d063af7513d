#pragma once

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include <boost/math/special_functions/gamma.hpp>

#include "bdre/errors.hpp"
#include "bdre/params.hpp"
#include "bdre/model.hpp"
#include "bdre/quadrature.hpp"

namespace bdre {

/// A nonnegative quantity that may be +∞. Kept distinct from a floating
/// overflow so reports can say "diverges".
struct ExtendedReal {
    double value = 0.0;
    bool infinite = false;

    static ExtendedReal finite(double v) { return {v, false}; }
    static ExtendedReal infinity() { return {std::numeric_limits<double>::infinity(), true}; }

    [[nodiscard]] bool is_finite() const { return !infinite; }
    [[nodiscard]] std::string str() const { return infinite ? "inf" : std::to_string(value); }

    friend ExtendedReal operator*(double c, ExtendedReal x) {
        if (x.infinite) return c == 0.0 ? finite(0.0) : infinity();  // 0·∞ = 0
        return finite(c * x.value);
    }
};

/// Gamma law with shape ν and scale 1.
struct GammaLaw {
    double nu = 1.0;

    explicit GammaLaw(double shape) : nu(shape) {
        detail::require(shape > 0.0 && std::isfinite(shape), "gamma shape must be positive");
    }
    [[nodiscard]] double log_density(double x) const {
        return (nu - 1.0) * std::log(x) - x - std::lgamma(nu);
    }
    [[nodiscard]] double density(double x) const { return x > 0.0 ? std::exp(log_density(x)) : 0.0; }
    [[nodiscard]] double cdf(double x) const { return x > 0.0 ? boost::math::gamma_p(nu, x) : 0.0; }
    [[nodiscard]] double mean() const { return nu; }
};

/// E[h(G_ν)] by quadrature. For ν < 1 the substitution v = x^ν absorbs the
/// x^{ν-1} singularity of the density.
template <class H>
double gamma_expectation(double nu, H&& h, const QuadratureConfig& q) {
    const GammaLaw law(nu);
    if (nu < 1.0) {
        const double lg = std::lgamma(nu + 1.0);
        auto f = [&](double v) {
            const double x = std::pow(v, 1.0 / nu);
            return std::exp(-x - lg) * h(x);
        };
        return integrate_to_infinity(f, 0.0, q).value;
    }
    auto f = [&](double x) { return x > 0.0 ? law.density(x) * h(x) : 0.0; };
    return integrate_to_infinity(f, 0.0, q).value;
}

// ---------------------------------------------------------------------------
// ψ and ∫ a ψ(a) da
// ---------------------------------------------------------------------------

/// ψ(a) = (√2/π) a^{-1/2} ∫_0^∞ exp(-a cosh²y) cosh y dy by adaptive
/// quadrature. The integrand is evaluated as exp(-a sinh²y)·e^{-a} so large
/// a does not underflow before the prefactor is applied.
inline double psi(double a, const QuadratureConfig& q = {}) {
    detail::require(a > 0.0 && std::isfinite(a), "psi requires a > 0");
    auto f = [a](double y) {
        const double sh = std::sinh(y);
        return std::exp(-a * sh * sh) * std::cosh(y);
    };
    const double inner = integrate_to_infinity(f, 0.0, q).value;
    return std::numbers::sqrt2 / std::numbers::pi / std::sqrt(a) * std::exp(-a) * inner;
}

/// ψ(a) = e^{-a}/(√(2π) a), from the substitution u = sinh y.
inline double psi_closed_form(double a) {
    detail::require(a > 0.0, "psi requires a > 0");
    return std::exp(-a) / (std::sqrt(2.0 * std::numbers::pi) * a);
}

enum class PsiRoute { Quadrature, ClosedForm };

/// ∫_0^∞ a ψ(a) da (= 1/√(2π)). The Quadrature route nests the ψ quadrature
/// inside the outer integral.
inline double integral_a_psi(const QuadratureConfig& q = {}, PsiRoute route = PsiRoute::Quadrature) {
    if (route == PsiRoute::ClosedForm) {
        return integrate_to_infinity([](double a) { return a > 0.0 ? a * psi_closed_form(a) : 0.0; },
                                     0.0, q)
            .value;
    }
    QuadratureConfig inner = q;
    inner.rel_tol = std::min(q.rel_tol, 1e-12);
    inner.abs_tol = 1e-300;
    return integrate_to_infinity([&](double a) { return a > 0.0 ? a * psi(a, inner) : 0.0; }, 0.0,
                                 q)
        .value;
}

// ---------------------------------------------------------------------------
// φ_β
// ---------------------------------------------------------------------------

namespace detail {

inline double log_cosh(double x) {
    x = std::abs(x);
    return x + std::log1p(std::exp(-2.0 * x)) - std::numbers::ln2;
}

inline double log_sinh(double x) {  // x > 0
    if (x < 1.0) return std::log(std::sinh(x));
    return x + std::log1p(-std::exp(-2.0 * x)) - std::numbers::ln2;
}

}  // namespace detail

/// φ_β(a) = (1/(√2 π)) Γ((β+2)/2) e^{-a} a^{-β/2}
///          ∫_0^∞∫_0^∞ u^{(β-1)/2} e^{-u} ξ sinh ξ cosh ξ / (u + a cosh²ξ)^{(β+2)/2} dξ du,
/// by iterated adaptive quadrature: the ξ-integral (tail ~ ξ e^{-βξ}) on the
/// tan map, the u-integral on the exp map after u = v², which turns
/// u^{(β-1)/2} du into 2 v^β dv.
inline double phi_beta(double a, double beta, const QuadratureConfig& q = {}) {
    detail::require(a > 0.0 && std::isfinite(a), "phi_beta requires a > 0");
    detail::require(beta > 0.0 && std::isfinite(beta), "phi_beta requires beta > 0");
    const double power = 0.5 * (beta + 2.0);
    const double log_a = std::log(a);

    QuadratureConfig inner_cfg = q.with_map(InfiniteDomainMap::TanSubstitution);
    inner_cfg.rel_tol = std::min(q.rel_tol, 1e-12);
    inner_cfg.abs_tol = 1e-300;
    auto inner = [&](double u) {
        auto integrand = [&](double xi) {
            if (xi <= 0.0) return 0.0;
            const double lc = detail::log_cosh(xi);
            const double log_den = power * (log_a + 2.0 * lc + std::log1p(u * std::exp(-2.0 * lc) / a));
            const double lg = std::log(xi) + detail::log_sinh(xi) + lc - log_den;
            return lg < -745.0 ? 0.0 : std::exp(lg);
        };
        return integrate_to_infinity(integrand, 0.0, inner_cfg).value;
    };
    auto outer = [&](double v) {
        if (v <= 0.0) return 0.0;
        const double u = v * v;
        const double w = 2.0 * std::pow(v, beta) * std::exp(-u);
        return w == 0.0 ? 0.0 : w * inner(u);
    };
    const double body =
        integrate_to_infinity(outer, 0.0, q.with_map(InfiniteDomainMap::ExpSubstitution)).value;
    const double prefactor = std::exp(std::lgamma(power) - a - 0.5 * beta * log_a) /
                             (std::numbers::sqrt2 * std::numbers::pi);
    return prefactor * body;
}

// ---------------------------------------------------------------------------
// Gamma moments, Laplace transform of the martingale limit, decay constants
// ---------------------------------------------------------------------------

/// E[1/G_ν] = 1/(ν - 1) for ν > 1 and +∞ for ν ∈ (0, 1].
inline ExtendedReal mean_inverse_gamma(double nu) {
    detail::require(nu > 0.0 && std::isfinite(nu), "mean_inverse_gamma requires nu > 0");
    if (nu <= 1.0) return ExtendedReal::infinity();
    return ExtendedReal::finite(1.0 / (nu - 1.0));
}

/// E^z[exp(-λY)] = E[exp(-z/(B + 1/λ))] with B = (σ_b²/σ_e²)·G_β (AsPrinted)
/// or B = σ_b²/(σ_e²·G_β) (InverseGamma), using c/∞ = 0 and c/0 = ∞ for
/// c > 0. λ may be +∞.
inline double laplace_Y(double lambda, double z, const ModelParams& p, DufresneReading reading,
                        const QuadratureConfig& q = {}) {
    detail::require(p.alpha > 0.0 && p.sigma_e > 0.0 && p.sigma_b > 0.0,
                    "laplace_Y requires alpha, sigma_e, sigma_b > 0");
    detail::require(lambda >= 0.0, "lambda must be nonnegative");
    detail::require(z >= 0.0, "z must be nonnegative");
    if (lambda == 0.0 || z == 0.0) return 1.0;
    const double inv_lambda = std::isinf(lambda) ? 0.0 : 1.0 / lambda;
    const double ratio = p.sigma_b * p.sigma_b / (p.sigma_e * p.sigma_e);
    auto h = [&](double g) {
        const double b = reading == DufresneReading::AsPrinted ? ratio * g : ratio / g;
        const double denom = b + inv_lambda;
        if (denom <= 0.0) return 0.0;
        return std::exp(-z / denom);
    };
    QuadratureConfig cfg = q;
    cfg.abs_tol = std::min(q.abs_tol, 1e-14);
    return gamma_expectation(p.beta(), h, cfg);
}

/// Exponential rate and preset polynomial power of P(Z_t > 0 | Z_∞ = 0):
/// P ~ C t^{power} e^{-rate·t}.
struct DecayExponents {
    double rate = 0.0;
    double power = 0.0;
};

inline DecayExponents decay_exponents(const ModelParams& p) {
    validate_supercritical(p.with_z0(p.z0 > 0.0 ? p.z0 : 1.0));
    const double ve = p.sigma_e * p.sigma_e;
    switch (classify_regime(p)) {
        case Regime::WeaklySupercritical: return {p.alpha * p.alpha / (2.0 * ve), -1.5};
        case Regime::IntermediateSupercritical: return {0.5 * ve, -0.5};
        case Regime::StronglySupercritical: return {p.alpha - 0.5 * ve, 0.0};
        default: break;
    }
    throw ConfigError("decay exponents are defined for supercritical regimes only");
}

/// lim t^{-power} e^{rate·t} P^z(Z_t > 0 | Z_∞ = 0).
///
/// Intermediate: (2zσ_e/σ_b²) ∫ a ψ(a) da.
/// Strong: (zσ_e²/σ_b²)·E[1/G_ν] with ν = 2(α/σ_e² - 1) under AsPrinted; the
/// same derivation with the inverse-gamma exponential functional gives
/// (zσ_e²/σ_b²)·E[G_ν] = (zσ_e²/σ_b²)·ν, which is what simulation reproduces.
/// Weak: throws NotComputable.
inline ExtendedReal theorem1_constant(const ModelParams& p, Regime regime, double z,
                                      const QuadratureConfig& q = {},
                                      DufresneReading reading = DufresneReading::AsPrinted) {
    detail::require(p.alpha > 0.0 && p.sigma_e > 0.0 && p.sigma_b > 0.0,
                    "decay constants require alpha, sigma_e, sigma_b > 0");
    detail::require(z > 0.0, "decay constants require z > 0");
    detail::require(regime == classify_regime(p), "regime does not match the parameters");
    const double ve = p.sigma_e * p.sigma_e;
    const double vb = p.sigma_b * p.sigma_b;
    switch (regime) {
        case Regime::IntermediateSupercritical:
            return ExtendedReal::finite(2.0 * z * p.sigma_e / vb * integral_a_psi(q));
        case Regime::StronglySupercritical: {
            const double nu = 2.0 * (p.alpha / ve - 1.0);
            if (reading == DufresneReading::InverseGamma) {
                return ExtendedReal::finite(z * ve / vb * nu);
            }
            return (z * ve / vb) * mean_inverse_gamma(nu);
        }
        case Regime::WeaklySupercritical:
            throw NotComputable("the weakly supercritical constant involves an undefined function f");
        default:
            break;
    }
    throw ConfigError("decay constants exist for supercritical regimes only");
}

}  // namespace bdre
