// SPDX-License-Identifier: Apache-2.0
/**
 * @file stats.hpp
 * @brief Sample summaries used by the Monte Carlo harness and the tests
 */

#pragma once

#include "hjm2f/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace hjm2f::stats {

inline double mean(std::span<const double> x) {
    if (x.empty()) {
        throw DomainError("mean of empty sample");
    }
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

/// Unbiased sample variance (n - 1 denominator).
inline double variance(std::span<const double> x) {
    if (x.size() < 2) {
        throw DomainError("variance needs at least two observations");
    }
    const double m = mean(x);
    double acc = 0.0;
    for (double v : x) {
        acc += (v - m) * (v - m);
    }
    return acc / static_cast<double>(x.size() - 1);
}

/// Empirical quantile with linear interpolation between order statistics
/// (Hyndman-Fan type 7, the R/NumPy default).
inline double quantile(std::vector<double> x, double p) {
    if (x.empty()) {
        throw DomainError("quantile of empty sample");
    }
    std::sort(x.begin(), x.end());
    const double h = (static_cast<double>(x.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, x.size() - 1);
    return x[lo] + (h - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

inline double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

/// Mean after removing floor(fraction * n) observations from each tail.
inline double trimmed_mean(std::vector<double> x, double fraction) {
    if (x.empty()) {
        throw DomainError("trimmed mean of empty sample");
    }
    std::sort(x.begin(), x.end());
    auto k = static_cast<std::size_t>(std::floor(fraction * static_cast<double>(x.size())));
    if (2 * k >= x.size()) {
        k = (x.size() - 1) / 2;
    }
    return mean(std::span<const double>(x).subspan(k, x.size() - 2 * k));
}

/// Jarque-Bera statistic; asymptotically chi-squared with 2 degrees of freedom.
inline double jarque_bera(std::span<const double> x) {
    const double n = static_cast<double>(x.size());
    const double m = mean(x);
    double m2 = 0.0, m3 = 0.0, m4 = 0.0;
    for (double v : x) {
        const double d = v - m;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
    }
    m2 /= n;
    m3 /= n;
    m4 /= n;
    const double skew = m3 / std::pow(m2, 1.5);
    const double kurt = m4 / (m2 * m2);
    return n / 6.0 * (skew * skew + 0.25 * (kurt - 3.0) * (kurt - 3.0));
}

} // namespace hjm2f::stats
