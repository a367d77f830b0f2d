#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

namespace she {

inline double mean(std::span<const double> v) {
    if (v.empty()) throw std::invalid_argument("mean: empty");
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

inline double sample_variance(std::span<const double> v) {
    if (v.size() < 2) throw std::invalid_argument("sample_variance: need >= 2");
    double m = mean(v), s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double standard_error(std::span<const double> v) {
    return std::sqrt(sample_variance(v) / static_cast<double>(v.size()));
}

// SE of a Bernoulli frequency estimate.
inline double proportion_se(double p_hat, std::size_t n) {
    return std::sqrt(p_hat * (1.0 - p_hat) / static_cast<double>(n));
}

// One-sided 95% upper bound for a zero-count cell.
inline double rule_of_three(std::size_t n) { return 3.0 / static_cast<double>(n); }

// Least-squares slope of y against x.
inline double regression_slope(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("regression_slope: bad sizes");
    double mx = mean(x), my = mean(y), num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - mx) * (y[i] - my);
        den += (x[i] - mx) * (x[i] - mx);
    }
    if (den == 0.0) throw std::invalid_argument("regression_slope: degenerate x");
    return num / den;
}

inline double quantile(std::vector<double> v, double q) {
    if (v.empty()) throw std::invalid_argument("quantile: empty");
    std::sort(v.begin(), v.end());
    double pos = q * static_cast<double>(v.size() - 1);
    std::size_t lo = static_cast<std::size_t>(pos);
    std::size_t hi = std::min(lo + 1, v.size() - 1);
    double frac = pos - static_cast<double>(lo);
    return v[lo] * (1.0 - frac) + v[hi] * frac;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// Two-sided KS distance of a sample against the standard normal.
inline double ks_statistic_normal(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    double d = 0.0;
    const double n = static_cast<double>(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double f = normal_cdf(v[i]);
        d = std::max(d, std::fabs(f - static_cast<double>(i) / n));
        d = std::max(d, std::fabs(static_cast<double>(i + 1) / n - f));
    }
    return d;
}

// Two-sample KS statistic.
inline double ks_statistic_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j]) ++i;
        else ++j;
        double fa = static_cast<double>(i) / static_cast<double>(a.size());
        double fb = static_cast<double>(j) / static_cast<double>(b.size());
        d = std::max(d, std::fabs(fa - fb));
    }
    return d;
}

// Critical KS distance at significance level alpha (asymptotic form).
inline double ks_critical(double alpha, double n_eff) {
    return std::sqrt(-0.5 * std::log(alpha / 2.0)) / std::sqrt(n_eff);
}

}  // namespace she
