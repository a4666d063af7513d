#pragma once

#include <cmath>
#include <type_traits>

#include "bdre/errors.hpp"
#include "bdre/params.hpp"

namespace bdre {

// ---------------------------------------------------------------------------
// Scale functions
// ---------------------------------------------------------------------------

/// U(z) = (σ_e² z + σ_b²)^(-β), the scale function of the population.
inline double scale_U(double z, const ModelParams& p) {
    detail::require(p.sigma_e > 0.0, "scale_U requires sigma_e > 0");
    detail::require(z >= 0.0, "scale_U requires z >= 0");
    detail::require(!(p.sigma_b == 0.0 && z == 0.0), "scale_U(0) is undefined when sigma_b = 0");
    return std::pow(p.sigma_e * p.sigma_e * z + p.sigma_b * p.sigma_b, -p.beta());
}

/// V(s) = exp(-β s), the scale function of the environment.
inline double scale_V(double s, const ModelParams& p) {
    detail::require(p.sigma_e > 0.0, "scale_V requires sigma_e > 0");
    return std::exp(-p.beta() * s);
}

/// P^z(Z_∞ = 0) = U(z)/U(0) = (1 + σ_e² z/σ_b²)^(-β) for α > 0.
inline double extinction_probability(double z, const ModelParams& p) {
    detail::require(p.alpha > 0.0, "extinction_probability requires alpha > 0");
    detail::require(p.sigma_e > 0.0 && p.sigma_b > 0.0,
                    "extinction_probability requires sigma_e, sigma_b > 0");
    detail::require(z >= 0.0, "extinction_probability requires z >= 0");
    const double x = p.sigma_e * p.sigma_e * z / (p.sigma_b * p.sigma_b);
    return std::exp(-p.beta() * std::log1p(x));
}

/// U(z)/(U(0) - U(z)), evaluated through log1p/expm1 so that small z keeps
/// its digits. Diverges like σ_b²/(β σ_e² z) as z → 0.
inline double survival_correction_ratio(double z, const ModelParams& p) {
    detail::require(p.sigma_e > 0.0 && p.sigma_b > 0.0 && p.alpha > 0.0,
                    "survival correction requires alpha, sigma_e, sigma_b > 0");
    detail::require(z > 0.0, "survival correction is undefined at z = 0");
    const double x = p.sigma_e * p.sigma_e * z / (p.sigma_b * p.sigma_b);
    const double log_ratio = -p.beta() * std::log1p(x);  // log(U(z)/U(0))
    const double survive = -std::expm1(log_ratio);        // 1 - U(z)/U(0)
    return std::exp(log_ratio) / survive;
}

// ---------------------------------------------------------------------------
// Generator of (Z, S)
// ---------------------------------------------------------------------------

/// Value and first/second partial derivatives of a test function at one state.
struct Jet {
    double f = 0.0;
    double f_z = 0.0;
    double f_s = 0.0;
    double f_zz = 0.0;
    double f_ss = 0.0;
    double f_zs = 0.0;
};

/// The five summands of the generator; `sum()` is the generator itself and
/// `magnitude()` the scale used for relative harmonicity checks.
struct GeneratorTerms {
    double drift_z = 0.0;
    double drift_s = 0.0;
    double diffusion_zz = 0.0;
    double diffusion_ss = 0.0;
    double covariation_zs = 0.0;

    [[nodiscard]] double sum() const {
        return drift_z + drift_s + diffusion_zz + diffusion_ss + covariation_zs;
    }
    [[nodiscard]] double magnitude() const {
        return std::abs(drift_z) + std::abs(drift_s) + std::abs(diffusion_zz) +
               std::abs(diffusion_ss) + std::abs(covariation_zs);
    }
};

inline GeneratorTerms generator_terms(const Jet& d, double z, const ModelParams& p) {
    detail::require(z >= 0.0, "generator requires z >= 0");
    const double ve = p.sigma_e * p.sigma_e;
    const double vb = p.sigma_b * p.sigma_b;
    GeneratorTerms t;
    t.drift_z = (p.alpha + 0.5 * ve) * z * d.f_z;
    t.drift_s = p.alpha * d.f_s;
    t.diffusion_zz = 0.5 * (ve * z * z + vb * z) * d.f_zz;
    t.diffusion_ss = 0.5 * ve * d.f_ss;
    t.covariation_zs = ve * z * d.f_zs;
    return t;
}

/// Applies the generator to derivatives supplied at the point (z, s). The
/// coefficients do not depend on s, which is accepted for symmetry with the
/// callable overload.
inline double generator_apply(const Jet& d, double z, [[maybe_unused]] double s,
                              const ModelParams& p) {
    return generator_terms(d, z, p).sum();
}

/// Overload for a callable `jet(z, s) -> Jet`.
template <class JetFn>
    requires std::is_invocable_r_v<Jet, JetFn, double, double>
double generator_apply(JetFn&& jet, double z, double s, const ModelParams& p) {
    return generator_apply(jet(z, s), z, s, p);
}

/// Analytic derivatives of U (constant in s).
inline Jet scale_U_jet(double z, [[maybe_unused]] double s, const ModelParams& p) {
    const double ve = p.sigma_e * p.sigma_e;
    const double b = p.beta();
    const double base = ve * z + p.sigma_b * p.sigma_b;
    Jet j;
    j.f = std::pow(base, -b);
    j.f_z = -b * ve * std::pow(base, -b - 1.0);
    j.f_zz = b * (b + 1.0) * ve * ve * std::pow(base, -b - 2.0);
    return j;
}

/// Analytic derivatives of V (constant in z).
inline Jet scale_V_jet([[maybe_unused]] double z, double s, const ModelParams& p) {
    const double b = p.beta();
    Jet j;
    j.f = std::exp(-b * s);
    j.f_s = -b * j.f;
    j.f_ss = b * b * j.f;
    return j;
}

// ---------------------------------------------------------------------------
// Drifts of the conditioned diffusions
// ---------------------------------------------------------------------------

/// Drift coefficients of a two-dimensional diffusion written as
///
///   dZ = drift_z dt + Z dS + sqrt(σ_b² Z) dW_b,   dS = drift_s dt + σ_e dW_e.
///
/// The unconditioned BDRE has drift_z = ½σ_e² z and drift_s = α.
struct DriftPair {
    double drift_z = 0.0;
    double drift_s = 0.0;

    /// dt-coefficient of dZ once dS has been substituted.
    [[nodiscard]] double total_drift_z(double z) const { return drift_z + z * drift_s; }
};

/// Doob h-transform of the BDRE by a function h of z alone. With
/// c = (σ_e² z + σ_b²) h'(z)/h(z) the correction adds c·σ_b²/(σ_e² z + σ_b²)·z
/// to drift_z and c·σ_e² z/(σ_e² z + σ_b²) to drift_s, so that the total drift
/// of Z moves by exactly c·z. c = 0 gives back the unconditioned drifts.
inline DriftPair h_transform_drift(double z, const ModelParams& p, double c) {
    const double ve = p.sigma_e * p.sigma_e;
    const double vb = p.sigma_b * p.sigma_b;
    const double denom = ve * z + vb;
    DriftPair d{0.5 * ve * z, p.alpha};
    if (c == 0.0) return d;
    d.drift_z += c * vb / denom * z;
    d.drift_s += c * ve * z / denom;
    return d;
}

/// Drifts of (Ž, Š), the BDRE conditioned on eventual extinction; h = U, so
/// c = -2α.
inline DriftPair drift_conditioned_extinction(double z, const ModelParams& p) {
    detail::require(p.alpha > 0.0, "conditioning on extinction requires alpha > 0");
    detail::require(p.sigma_e > 0.0, "conditioning on extinction requires sigma_e > 0");
    detail::require(z >= 0.0 && p.sigma_b + z > 0.0, "requires z >= 0 and sigma_b + z > 0");
    return h_transform_drift(z, p, -2.0 * p.alpha);
}

/// Drifts of (Ẑ, Ŝ), the BDRE conditioned on survival; h = U(0) - U, so
/// c = 2α·U(z)/(U(0) - U(z)). drift_s lies in (α, α + σ_e²) and tends to α
/// as z → ∞ and to α + σ_e² as z → 0.
inline DriftPair drift_conditioned_survival(double z, const ModelParams& p) {
    detail::require(p.sigma_b > 0.0, "conditioning on survival requires sigma_b > 0");
    return h_transform_drift(z, p, 2.0 * p.alpha * survival_correction_ratio(z, p));
}

}  // namespace bdre
