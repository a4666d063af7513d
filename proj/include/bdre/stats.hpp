#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "bdre/errors.hpp"

namespace bdre {

/// A Monte Carlo result. std_error = sample standard deviation / sqrt(n).
struct MCEstimate {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t n = 0;
    std::string method_tag;

    [[nodiscard]] double lower(double k) const { return mean - k * std_error; }
    [[nodiscard]] double upper(double k) const { return mean + k * std_error; }
    /// |mean - value| <= k·std_error.
    [[nodiscard]] bool covers(double value, double k) const {
        return std::abs(mean - value) <= k * std_error;
    }
};

inline double combined_std_error(const MCEstimate& a, const MCEstimate& b) {
    return std::hypot(a.std_error, b.std_error);
}

/// |a - b| <= k·sqrt(se_a² + se_b²).
inline bool agree(const MCEstimate& a, const MCEstimate& b, double k) {
    return std::abs(a.mean - b.mean) <= k * combined_std_error(a, b);
}

/// Welford running mean/variance with Chan's pairwise merge.
class MeanAccumulator {
public:
    void add(double x) {
        ++n_;
        const double delta = x - mean_;
        mean_ += delta / static_cast<double>(n_);
        m2_ += delta * (x - mean_);
    }

    void merge(const MeanAccumulator& other) {
        if (other.n_ == 0) return;
        if (n_ == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(n_);
        const double nb = static_cast<double>(other.n_);
        const double delta = other.mean_ - mean_;
        const double total = na + nb;
        mean_ += delta * nb / total;
        m2_ += other.m2_ + delta * delta * na * nb / total;
        n_ += other.n_;
    }

    [[nodiscard]] std::size_t count() const { return n_; }
    [[nodiscard]] double mean() const { return mean_; }
    [[nodiscard]] double variance() const {
        return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
    }
    [[nodiscard]] double std_error() const {
        return n_ > 0 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
    }
    [[nodiscard]] MCEstimate estimate(std::string tag) const {
        return MCEstimate{mean_, std_error(), n_, std::move(tag)};
    }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

/// A fixed-length bundle of accumulators, one per tracked quantity.
struct AccumulatorSet {
    std::vector<MeanAccumulator> items;

    AccumulatorSet() = default;
    explicit AccumulatorSet(std::size_t k) : items(k) {}

    void merge(const AccumulatorSet& other) {
        if (items.empty()) {
            items = other.items;
            return;
        }
        for (std::size_t i = 0; i < items.size() && i < other.items.size(); ++i) {
            items[i].merge(other.items[i]);
        }
    }
};

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov
// ---------------------------------------------------------------------------

/// Asymptotic Kolmogorov tail Q(λ) = 2 Σ_{k>=1} (-1)^{k-1} exp(-2k²λ²).
inline double kolmogorov_tail(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 0.2) return 1.0;  // series converges slowly; Q is 1 to 1e-20 here
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = sign * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-18) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

/// c(a) with Q(c(a)) ≈ a for the two-sided test, sqrt(-ln(a/2)/2).
inline double kolmogorov_critical_coefficient(double level) {
    return std::sqrt(-0.5 * std::log(0.5 * level));
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 1.0;
    double critical_value = 0.0;  ///< at the requested level
    double level = 0.01;
    std::size_t n1 = 0;
    std::size_t n2 = 0;  ///< 0 for the one-sample test

    [[nodiscard]] bool rejects() const { return statistic > critical_value; }
};

/// Two-sample KS. Ties (including atoms such as the mass of Z at 0) are
/// handled by only comparing the empirical CDFs after each distinct value.
inline KsResult ks_two_sample(std::span<const double> a, std::span<const double> b,
                              double level = 0.01) {
    detail::require(!a.empty() && !b.empty(), "KS test needs nonempty samples");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double n1 = static_cast<double>(x.size());
    const double n2 = static_cast<double>(y.size());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / n1 - static_cast<double>(j) / n2));
    }
    const double ne = n1 * n2 / (n1 + n2);
    KsResult r;
    r.statistic = d;
    r.level = level;
    r.n1 = x.size();
    r.n2 = y.size();
    r.p_value = kolmogorov_tail(std::sqrt(ne) * d);
    r.critical_value = kolmogorov_critical_coefficient(level) / std::sqrt(ne);
    return r;
}

/// One-sample KS against a continuous CDF.
template <class Cdf>
KsResult ks_one_sample(std::span<const double> sample, Cdf&& cdf, double level = 0.01) {
    detail::require(!sample.empty(), "KS test needs a nonempty sample");
    std::vector<double> x(sample.begin(), sample.end());
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
    }
    KsResult r;
    r.statistic = d;
    r.level = level;
    r.n1 = x.size();
    r.p_value = kolmogorov_tail(std::sqrt(n) * d);
    r.critical_value = kolmogorov_critical_coefficient(level) / std::sqrt(n);
    return r;
}

// ---------------------------------------------------------------------------
// Least squares
// ---------------------------------------------------------------------------

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double rmse = 0.0;
};

inline LineFit fit_line(std::span<const double> x, std::span<const double> y) {
    detail::require(x.size() == y.size() && x.size() >= 2, "line fit needs >= 2 points");
    const double n = static_cast<double>(x.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
    }
    detail::require(sxx > 0.0, "line fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = y[i] - (f.intercept + f.slope * x[i]);
        ss += r * r;
    }
    f.rmse = std::sqrt(ss / n);
    return f;
}

}  // namespace bdre
