#pragma once

#include <cmath>
#include <string>
#include <string_view>

#include "bdre/errors.hpp"

namespace bdre {

/// Parameters of the branching diffusion in random environment
///
///   dZ = ½σ_e² Z dt + Z dS + sqrt(σ_b² Z) dW_b,   dS = α dt + σ_e dW_e,
///
/// started from Z_0 = z0, S_0 = 0.
struct ModelParams {
    double alpha = 1.0;    ///< criticality parameter (drift of S per unit time)
    double sigma_e = 1.0;  ///< environmental standard deviation
    double sigma_b = 1.0;  ///< branching standard deviation
    double z0 = 1.0;       ///< initial population mass

    /// β = 2α/σ_e². Recomputed on every call.
    [[nodiscard]] double beta() const { return 2.0 * alpha / (sigma_e * sigma_e); }

    [[nodiscard]] ModelParams with_alpha(double a) const {
        ModelParams p = *this;
        p.alpha = a;
        return p;
    }
    [[nodiscard]] ModelParams with_z0(double z) const {
        ModelParams p = *this;
        p.z0 = z;
        return p;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

/// Throws ConfigError unless the fields are finite, the standard deviations
/// and z0 are nonnegative, and σ_b + z0 > 0.
inline void validate(const ModelParams& p) {
    detail::require(std::isfinite(p.alpha) && std::isfinite(p.sigma_e) &&
                        std::isfinite(p.sigma_b) && std::isfinite(p.z0),
                    "model parameters must be finite");
    detail::require(p.sigma_e >= 0.0, "sigma_e must be nonnegative");
    detail::require(p.sigma_b >= 0.0, "sigma_b must be nonnegative");
    detail::require(p.z0 >= 0.0, "z0 must be nonnegative");
    detail::require(p.sigma_b + p.z0 > 0.0, "sigma_b + z0 must be positive");
}

/// Decay-constant operations need α, σ_e, σ_b all strictly positive.
inline void validate_supercritical(const ModelParams& p) {
    validate(p);
    detail::require(p.alpha > 0.0, "alpha must be positive");
    detail::require(p.sigma_e > 0.0, "sigma_e must be positive");
    detail::require(p.sigma_b > 0.0, "sigma_b must be positive");
}

enum class Regime {
    StronglySupercritical,
    IntermediateSupercritical,
    WeaklySupercritical,
    Critical,
    WeaklySubcritical,
    IntermediateSubcritical,
    StronglySubcritical,
};

/// Classification by exact comparison of α against -σ_e², 0 and σ_e².
inline Regime classify_regime(const ModelParams& p) {
    if (!(p.sigma_e > 0.0)) {
        throw ConfigError("regime classification requires sigma_e > 0");
    }
    const double v = p.sigma_e * p.sigma_e;
    const double a = p.alpha;
    if (a > v) return Regime::StronglySupercritical;
    if (a == v) return Regime::IntermediateSupercritical;
    if (a > 0.0) return Regime::WeaklySupercritical;
    if (a == 0.0) return Regime::Critical;
    if (a > -v) return Regime::WeaklySubcritical;
    if (a == -v) return Regime::IntermediateSubcritical;
    return Regime::StronglySubcritical;
}

inline bool is_supercritical(Regime r) {
    return r == Regime::StronglySupercritical || r == Regime::IntermediateSupercritical ||
           r == Regime::WeaklySupercritical;
}

inline std::string_view to_string(Regime r) {
    switch (r) {
        case Regime::StronglySupercritical: return "strongly_supercritical";
        case Regime::IntermediateSupercritical: return "intermediate_supercritical";
        case Regime::WeaklySupercritical: return "weakly_supercritical";
        case Regime::Critical: return "critical";
        case Regime::WeaklySubcritical: return "weakly_subcritical";
        case Regime::IntermediateSubcritical: return "intermediate_subcritical";
        case Regime::StronglySubcritical: return "strongly_subcritical";
    }
    return "unknown";
}

/// Two readings of the law of the exponential functional
/// A = ∫_0^∞ exp(-α s - σ_e W_s) ds against a Gamma(β) variable G:
/// AsPrinted takes A = (2/σ_e²)·G, InverseGamma takes A = 2/(σ_e²·G). Only
/// InverseGamma is consistent with the scale-function extinction probability.
enum class DufresneReading { AsPrinted, InverseGamma };

inline std::string_view to_string(DufresneReading r) {
    return r == DufresneReading::AsPrinted ? "as_printed" : "inverse_gamma";
}

}  // namespace bdre
