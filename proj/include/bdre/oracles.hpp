#pragma once

// Reference values computed by methods that share no code with the
// production routines: double-exponential tensor rules instead of adaptive
// Gauss-Kronrod, Bessel closed forms instead of quadrature, gamma-function
// ratios instead of moment formulas.

#include <cmath>
#include <numbers>
#include <vector>

#include "bdre/errors.hpp"
#include "bdre/params.hpp"

namespace bdre::oracle {

/// Nodes and weights of the exp-sinh rule on (0, ∞):
/// x = exp(π/2 sinh t), t = kh for t in [t_lo, t_hi].
struct ExpSinhRule {
    std::vector<double> x;
    std::vector<double> log_x;
    std::vector<double> w;

    ExpSinhRule(double h, double t_lo, double t_hi) {
        const double half_pi = 0.5 * std::numbers::pi;
        for (double t = t_lo; t <= t_hi; t += h) {
            const double lx = half_pi * std::sinh(t);
            if (lx > 700.0) break;
            x.push_back(std::exp(lx));
            log_x.push_back(lx);
            w.push_back(h * half_pi * std::cosh(t) * std::exp(lx));
        }
    }
};

inline double log_add_exp(double a, double b) {
    const double hi = a > b ? a : b;
    const double lo = a > b ? b : a;
    return hi + std::log1p(std::exp(lo - hi));
}

/// φ_β(a) by a brute-force exp-sinh × exp-sinh tensor rule.
inline double phi_beta_tensor(double a, double beta, double h = 1.0 / 64.0) {
    detail::require(a > 0.0 && beta > 0.0, "phi oracle requires a, beta > 0");
    const ExpSinhRule rule(h, -5.5, 4.5);
    const double power = 0.5 * (beta + 2.0);
    const double log_a = std::log(a);
    // log(ξ sinh ξ cosh ξ) and log(a cosh² ξ) per node, computed once.
    std::vector<double> log_num(rule.x.size());
    std::vector<double> log_acosh2(rule.x.size());
    for (std::size_t j = 0; j < rule.x.size(); ++j) {
        const double xi = rule.x[j];
        // sinh ξ cosh ξ = sinh(2ξ)/2; log cosh ξ = ξ + log((1 + e^{-2ξ})/2)
        const double log_sc = xi < 20.0 ? std::log(0.5 * std::sinh(2.0 * xi))
                                        : 2.0 * xi - 2.0 * std::numbers::ln2;
        log_num[j] = rule.log_x[j] + log_sc;
        const double log_cosh = xi + std::log(0.5 * (1.0 + std::exp(-2.0 * xi)));
        log_acosh2[j] = log_a + 2.0 * log_cosh;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < rule.x.size(); ++i) {
        const double u = rule.x[i];
        const double log_u = rule.log_x[i];
        const double log_wu = 0.5 * (beta - 1.0) * log_u - u;
        if (log_wu < -700.0) continue;
        double inner = 0.0;
        for (std::size_t j = 0; j < rule.x.size(); ++j) {
            const double lg = log_num[j] - power * log_add_exp(log_u, log_acosh2[j]);
            if (lg > -700.0) inner += rule.w[j] * std::exp(lg);
        }
        total += rule.w[i] * std::exp(log_wu) * inner;
    }
    return std::tgamma(power) * std::exp(-a) * std::pow(a, -0.5 * beta) /
           (std::numbers::sqrt2 * std::numbers::pi) * total;
}

/// E[exp(-c/G_β)] = 2 c^{β/2} K_β(2√c)/Γ(β): the λ → ∞ limit of the Laplace
/// transform under the as-printed gamma reading, c = zσ_e²/σ_b².
inline double laplace_limit_as_printed(double z, const ModelParams& p) {
    const double c = z * p.sigma_e * p.sigma_e / (p.sigma_b * p.sigma_b);
    const double b = p.beta();
    return 2.0 * std::pow(c, 0.5 * b) * std::cyl_bessel_k(b, 2.0 * std::sqrt(c)) / std::tgamma(b);
}

/// E[exp(-c G_β)] = (1 + c)^{-β}: the same limit under the inverse-gamma
/// reading, equal to the extinction probability.
inline double laplace_limit_inverse_gamma(double z, const ModelParams& p) {
    const double c = z * p.sigma_e * p.sigma_e / (p.sigma_b * p.sigma_b);
    return std::pow(1.0 + c, -p.beta());
}

/// E[exp(-λ Z_t e^{-S_t}) | environment] = exp(-zλ/(1 + λ I_t)) for the
/// compound Poisson quenched law.
inline double quenched_laplace(double lambda, double z, double integral) {
    return std::exp(-z * lambda / (1.0 + lambda * integral));
}

/// E[1/G_ν] = Γ(ν-1)/Γ(ν) for ν > 1.
inline double mean_inverse_gamma(double nu) {
    detail::require(nu > 1.0, "finite only for nu > 1");
    return std::exp(std::lgamma(nu - 1.0) - std::lgamma(nu));
}

}  // namespace bdre::oracle
