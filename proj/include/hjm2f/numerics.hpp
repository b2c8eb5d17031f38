// SPDX-License-Identifier: Apache-2.0
/**
 * @file numerics.hpp
 * @brief Scalar root finding, minimisation and quadrature used by the estimators
 */

#pragma once

#include "hjm2f/errors.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>

namespace hjm2f::numerics {

struct BisectionOptions {
    double lower = 1e-6;         ///< initial bracket, expanded downwards by /10
    double upper = 1e3;          ///< initial bracket, expanded upwards by x10
    double min_lower = 1e-300;
    double max_upper = 1e300;
    double abs_tol = 1e-12;      ///< early exit on |f(x) - target|
    int max_iter = 2000;
};

/// Solves f(x) = target for a strictly monotone f on (0, inf).
///
/// The bracket starts at [lower, upper] and is expanded geometrically until it
/// encloses the target. Bisection then runs until the residual drops below
/// abs_tol or the bracket collapses to adjacent doubles.
/// Throws OutOfRangeError when no expansion within [min_lower, max_upper]
/// encloses the target.
template <typename F>
double invert_monotone(F&& f, double target, BisectionOptions opt = {}) {
    double lo = opt.lower;
    double hi = opt.upper;
    double f_lo = f(lo);
    double f_hi = f(hi);
    const bool decreasing = f_lo > f_hi;
    // g(x) = sign * (f(x) - target) is increasing in x
    const double sign = decreasing ? -1.0 : 1.0;
    auto g = [&](double v) { return sign * (v - target); };

    while (g(f_lo) > 0.0) {
        lo /= 10.0;
        if (lo < opt.min_lower) {
            throw OutOfRangeError("target not bracketed below");
        }
        f_lo = f(lo);
    }
    while (g(f_hi) < 0.0) {
        hi *= 10.0;
        if (hi > opt.max_upper) {
            throw OutOfRangeError("target not bracketed above");
        }
        f_hi = f(hi);
    }
    if (std::isnan(f_lo) || std::isnan(f_hi)) {
        throw OutOfRangeError("map is not finite on the bracket");
    }

    for (int it = 0; it < opt.max_iter; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) {
            return mid;
        }
        const double f_mid = f(mid);
        if (std::abs(f_mid - target) <= opt.abs_tol) {
            return mid;
        }
        if (g(f_mid) < 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct GoldenResult {
    double x;
    double value;
};

/// Golden-section minimisation of a unimodal f on [a, b].
template <typename F>
GoldenResult golden_section_min(F&& f, double a, double b, double x_tol = 1e-12,
                                int max_iter = 500) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < max_iter && (b - a) > x_tol * (1.0 + std::abs(a) + std::abs(b)); ++it) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    return fc <= fd ? GoldenResult{c, fc} : GoldenResult{d, fd};
}

/// Composite Simpson rule on equally spaced samples y[0..m] with spacing h.
/// An odd number of intervals closes with Simpson's 3/8 rule on the last three.
inline double simpson_samples(std::span<const double> y, double h) {
    const std::size_t m = y.size() - 1;
    if (y.size() < 2) {
        throw DomainError("simpson: need at least two samples");
    }
    if (m == 1) {
        return 0.5 * h * (y[0] + y[1]);
    }
    const std::size_t even_part = (m % 2 == 0) ? m : m - 3;
    double acc = 0.0;
    for (std::size_t k = 0; k + 2 <= even_part; k += 2) {
        acc += y[k] + 4.0 * y[k + 1] + y[k + 2];
    }
    double total = acc * h / 3.0;
    if (even_part != m) {
        const std::size_t k = even_part;
        total += 3.0 * h / 8.0 * (y[k] + 3.0 * y[k + 1] + 3.0 * y[k + 2] + y[k + 3]);
    }
    return total;
}

/// Composite Simpson rule for f on [a, b] with an even number of subintervals.
template <typename F>
double simpson(F&& f, double a, double b, std::size_t subintervals = 64) {
    if (subintervals % 2 != 0) {
        ++subintervals;
    }
    const double h = (b - a) / static_cast<double>(subintervals);
    double acc = f(a) + f(b);
    for (std::size_t k = 1; k < subintervals; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(k));
    }
    return acc * h / 3.0;
}

/// Inverse of the standard normal CDF.
///
/// Acklam's rational approximation followed by one Halley refinement step,
/// giving absolute error well below 1e-9 on (0, 1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile: p must lie in (0, 1)");
    }
    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log1p(-p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }
    // Halley step against the exact CDF
    const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(0.5 * x * x);
    return x - u / (1.0 + 0.5 * x * u);
}

} // namespace hjm2f::numerics
