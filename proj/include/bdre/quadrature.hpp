#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <vector>

#include "bdre/errors.hpp"

namespace bdre {

enum class InfiniteDomainMap {
    ExpSubstitution,  ///< x = a - log(1 - u)
    TanSubstitution,  ///< x = a + tan(πu/2), for slowly decaying integrands
};

struct QuadratureConfig {
    double rel_tol = 1e-10;
    double abs_tol = 1e-13;
    int max_subdivisions = 2000;
    InfiniteDomainMap infinite_domain_map = InfiniteDomainMap::ExpSubstitution;

    [[nodiscard]] QuadratureConfig with_map(InfiniteDomainMap m) const {
        QuadratureConfig c = *this;
        c.infinite_domain_map = m;
        return c;
    }
    friend bool operator==(const QuadratureConfig&, const QuadratureConfig&) = default;
};

inline void validate(const QuadratureConfig& q) {
    detail::require(q.rel_tol > 0.0 && q.abs_tol > 0.0, "quadrature tolerances must be positive");
    detail::require(q.max_subdivisions >= 1, "max_subdivisions must be positive");
}

struct QuadratureResult {
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
    long evaluations = 0;
};

namespace detail {

// 21-point Kronrod extension of the 10-point Gauss rule (QUADPACK qk21).
inline constexpr std::array<double, 11> kXgk = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.000000000000000000000000000000000};
inline constexpr std::array<double, 11> kWgk = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077208067000865, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr std::array<double, 5> kWg = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Segment {
    double a = 0.0;
    double b = 0.0;
    double value = 0.0;
    double error = 0.0;
    bool operator<(const Segment& o) const { return error < o.error; }
};

template <class F>
Segment gauss_kronrod_21(F& f, double a, double b) {
    const double center = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double f_center = f(center);
    double kronrod = f_center * kWgk[10];
    double gauss = 0.0;
    std::array<double, 10> f1{};
    std::array<double, 10> f2{};
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kXgk[j];
        f1[j] = f(center - dx);
        f2[j] = f(center + dx);
        kronrod += kWgk[j] * (f1[j] + f2[j]);
        if (j % 2 == 1) gauss += kWg[j / 2] * (f1[j] + f2[j]);
    }
    const double mean = 0.5 * kronrod;
    double asc = kWgk[10] * std::abs(f_center - mean);
    double absolute = kWgk[10] * std::abs(f_center);
    for (int j = 0; j < 10; ++j) {
        asc += kWgk[j] * (std::abs(f1[j] - mean) + std::abs(f2[j] - mean));
        absolute += kWgk[j] * (std::abs(f1[j]) + std::abs(f2[j]));
    }
    Segment s{a, b, kronrod * half, std::abs((kronrod - gauss) * half)};
    asc *= std::abs(half);
    absolute *= std::abs(half);
    if (asc != 0.0 && s.error != 0.0) {
        s.error = asc * std::min(1.0, std::pow(200.0 * s.error / asc, 1.5));
    }
    constexpr double eps = std::numeric_limits<double>::epsilon();
    if (absolute > std::numeric_limits<double>::min() / (50.0 * eps)) {
        s.error = std::max(50.0 * eps * absolute, s.error);
    }
    return s;
}

}  // namespace detail

/// Globally adaptive Gauss-Kronrod (21 points) on a finite interval: the
/// segment with the largest error estimate is bisected until the total error
/// is below max(abs_tol, rel_tol·|value|). Throws NumericalError when the
/// subdivision budget runs out.
template <class F>
QuadratureResult integrate(F&& f, double a, double b, const QuadratureConfig& q = {}) {
    validate(q);
    long evaluations = 0;
    auto counted = [&](double x) {
        ++evaluations;
        const double y = f(x);
        return std::isfinite(y) ? y : 0.0;
    };
    if (a == b) return {};
    std::priority_queue<detail::Segment> heap;
    heap.push(detail::gauss_kronrod_21(counted, a, b));
    double total = heap.top().value;
    double error = heap.top().error;
    int subdivisions = 0;
    while (error > std::max(q.abs_tol, q.rel_tol * std::abs(total))) {
        if (subdivisions >= q.max_subdivisions) {
            throw NumericalError("quadrature subdivision budget exhausted");
        }
        const detail::Segment worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const auto left = detail::gauss_kronrod_21(counted, worst.a, mid);
        const auto right = detail::gauss_kronrod_21(counted, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
        if (error <= std::max(q.abs_tol, q.rel_tol * std::abs(total))) break;
        // Re-sum occasionally so cancellation in the running totals cannot stall.
        if (subdivisions % 64 == 0) {
            std::vector<detail::Segment> all;
            all.reserve(heap.size());
            total = 0.0;
            error = 0.0;
            while (!heap.empty()) {
                all.push_back(heap.top());
                heap.pop();
            }
            for (const auto& s : all) {
                total += s.value;
                error += s.error;
                heap.push(s);
            }
        }
    }
    return QuadratureResult{total, error, subdivisions, evaluations};
}

/// ∫_a^∞ f(x) dx through the configured substitution onto (0, 1).
template <class F>
QuadratureResult integrate_to_infinity(F&& f, double a, const QuadratureConfig& q = {}) {
    if (q.infinite_domain_map == InfiniteDomainMap::TanSubstitution) {
        constexpr double half_pi = 0.5 * std::numbers::pi;
        auto mapped = [&](double u) {
            const double c = std::cos(half_pi * u);
            if (c <= 0.0) return 0.0;
            const double x = a + std::tan(half_pi * u);
            const double y = f(x);
            return y == 0.0 ? 0.0 : y * half_pi / (c * c);
        };
        return integrate(mapped, 0.0, 1.0, q);
    }
    auto mapped = [&](double u) {
        const double w = 1.0 - u;
        if (w <= 0.0) return 0.0;
        const double x = a - std::log(w);
        const double y = f(x);
        return y == 0.0 ? 0.0 : y / w;
    };
    return integrate(mapped, 0.0, 1.0, q);
}

}  // namespace bdre
