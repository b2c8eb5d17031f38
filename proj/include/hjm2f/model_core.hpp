// SPDX-License-Identifier: Apache-2.0
/**
 * @file model_core.hpp
 * @brief Closed-form quantities of the two-factor forward-price model
 *
 * Log forward prices follow
 *
 *   dX^j_t = b^j_t dt + exp(-theta (T_j - t)) sigma_t dB_t + sigma_bar_t dBbar_t
 *
 * with a short-term factor damped by time to maturity and a common long-term
 * factor. Everything here is a pure function of its arguments. All times are
 * in years, rates in 1/yr and squared volatilities in 1/yr.
 */

#pragma once

#include "hjm2f/errors.hpp"
#include "hjm2f/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace hjm2f {

inline constexpr double kDaysPerYear = 365.0;

/// Maturities closer than this are rejected as ill-conditioned.
inline constexpr double kMinMaturityGap = 1e-6;

inline constexpr double days_to_years(double days) { return days / kDaysPerYear; }
inline constexpr double years_to_days(double years) { return years * kDaysPerYear; }

/// Observation dates 0, delta, ..., n * delta = horizon and the contract
/// maturities T_1 < ... < T_d with horizon <= T_1.
class MaturityGrid {
public:
    MaturityGrid(std::vector<double> maturities, double horizon, std::size_t n_obs)
        : maturities_(std::move(maturities)), horizon_(horizon), n_obs_(n_obs),
          delta_(horizon / static_cast<double>(n_obs)) {
        if (maturities_.empty()) {
            throw DomainError("grid: at least one maturity required");
        }
        if (n_obs_ < 2) {
            throw DomainError("grid: n_obs must be at least 2");
        }
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_)) {
            throw DomainError("grid: horizon must be positive");
        }
        for (std::size_t j = 1; j < maturities_.size(); ++j) {
            if (!(maturities_[j] - maturities_[j - 1] >= kMinMaturityGap)) {
                throw DomainError("grid: maturities must be strictly increasing");
            }
        }
        if (horizon_ > maturities_.front() * (1.0 + 1e-12)) {
            throw DomainError("grid: horizon must not exceed the first maturity");
        }
    }

    static MaturityGrid from_days(const std::vector<double>& maturity_days, double horizon_days,
                                  std::size_t n_obs) {
        std::vector<double> years;
        years.reserve(maturity_days.size());
        for (double d : maturity_days) {
            years.push_back(days_to_years(d));
        }
        return {std::move(years), days_to_years(horizon_days), n_obs};
    }

    [[nodiscard]] const std::vector<double>& maturities() const noexcept { return maturities_; }
    [[nodiscard]] double maturity(std::size_t j) const { return maturities_.at(j); }
    [[nodiscard]] std::size_t dimension() const noexcept { return maturities_.size(); }
    [[nodiscard]] double horizon() const noexcept { return horizon_; }
    [[nodiscard]] std::size_t n_obs() const noexcept { return n_obs_; }
    [[nodiscard]] double delta() const noexcept { return delta_; }
    [[nodiscard]] double time(std::size_t k) const noexcept {
        return delta_ * static_cast<double>(k);
    }

    /// Same maturities and horizon, different sampling frequency.
    [[nodiscard]] MaturityGrid with_n_obs(std::size_t n) const {
        return {maturities_, horizon_, n};
    }

    /// Keeps the listed rows (by index, in the given order).
    [[nodiscard]] MaturityGrid select(std::span<const std::size_t> rows) const {
        std::vector<double> m;
        for (std::size_t r : rows) {
            m.push_back(maturities_.at(r));
        }
        return {std::move(m), horizon_, n_obs_};
    }

private:
    std::vector<double> maturities_;
    double horizon_;
    std::size_t n_obs_;
    double delta_;
};

/// Ellipticity box c_lo <= sigma_t, sigma_bar_t <= c_hi (volatility scale).
struct VolBounds {
    double lower;
    double upper;
};

/// Deterministic squared-volatility curves t -> sigma_t^2 and t -> sigma_bar_t^2.
struct VolCurves {
    std::function<double(double)> sigma_sq;
    std::function<double(double)> sigma_bar_sq;
    std::optional<VolBounds> bounds;

    static VolCurves constant(double sigma, double sigma_bar) {
        const double s2 = sigma * sigma;
        const double b2 = sigma_bar * sigma_bar;
        return {[s2](double) { return s2; }, [b2](double) { return b2; }, std::nullopt};
    }
};

/// Squared-volatility values sampled on an equally spaced time grid
/// t0, t0 + dt, ..., used when the curves are only known on observation dates.
struct CurveSamples {
    double t0 = 0.0;
    double dt = 0.0;
    std::vector<double> sigma_sq;
    std::vector<double> sigma_bar_sq;

    [[nodiscard]] double t_end() const {
        return t0 + dt * static_cast<double>(sigma_sq.size() - 1);
    }
};

/// Covariance of the increment pair (Delta X^1, Delta X^2) over one interval.
struct IncrementCovariance {
    double var1;
    double var2;
    double cov;

    [[nodiscard]] double correlation() const { return cov / std::sqrt(var1 * var2); }
};

namespace detail {

inline void check_rate(double theta) {
    if (!(theta > 0.0) || !std::isfinite(theta)) {
        throw DomainError("theta must be a positive finite rate");
    }
}

inline void check_pair(double T1, double T2) {
    if (!(T1 > 0.0)) {
        throw DomainError("maturities must be positive");
    }
    if (!(T2 - T1 >= kMinMaturityGap)) {
        throw DomainError("maturities must satisfy T2 > T1 (gap >= 1e-6 yr)");
    }
}

inline void check_triple(double T1, double T2, double T3) {
    check_pair(T1, T2);
    check_pair(T2, T3);
}

inline void check_two_maturities(const MaturityGrid& grid) {
    if (grid.dimension() < 2) {
        throw DomainError("at least two maturities are required");
    }
}

/// (e^{theta T2} - e^{theta T1})^2 / (T2 - T1)^2, the delta-method factor
/// converting psi-scale variance into theta-scale variance.
inline double rate_prefactor(double theta, double T1, double T2) {
    const double gap = (std::exp(theta * T2) - std::exp(theta * T1)) / (T2 - T1);
    return gap * gap;
}

struct WeightedIntegrals {
    double w_s2;        ///< int e^{2 theta t} sigma^2
    double w_s2_sb2;    ///< int e^{2 theta t} sigma^2 sigma_bar^2
    double w_s2_by_sb2; ///< int e^{2 theta t} sigma^2 / sigma_bar^2
};

inline WeightedIntegrals weighted_integrals(double theta, const CurveSamples& s) {
    const std::size_t m = s.sigma_sq.size();
    if (m < 2 || s.sigma_bar_sq.size() != m) {
        throw DomainError("curve samples: need matching series of length >= 2");
    }
    std::vector<double> a(m), b(m), c(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double t = s.t0 + s.dt * static_cast<double>(k);
        const double w = std::exp(2.0 * theta * t) * s.sigma_sq[k];
        a[k] = w;
        b[k] = w * s.sigma_bar_sq[k];
        c[k] = w / s.sigma_bar_sq[k];
    }
    return {numerics::simpson_samples(a, s.dt), numerics::simpson_samples(b, s.dt),
            numerics::simpson_samples(c, s.dt)};
}

inline CurveSamples sample_on_grid(const VolCurves& vol, const MaturityGrid& grid) {
    CurveSamples s;
    s.t0 = 0.0;
    s.dt = grid.delta();
    s.sigma_sq.resize(grid.n_obs() + 1);
    s.sigma_bar_sq.resize(grid.n_obs() + 1);
    for (std::size_t k = 0; k <= grid.n_obs(); ++k) {
        const double t = grid.time(k);
        s.sigma_sq[k] = vol.sigma_sq(t);
        s.sigma_bar_sq[k] = vol.sigma_bar_sq(t);
        if (!(s.sigma_sq[k] > 0.0) || !(s.sigma_bar_sq[k] > 0.0)) {
            throw DomainError("volatility curves must be strictly positive");
        }
        if (vol.bounds) {
            const double lo = vol.bounds->lower * vol.bounds->lower;
            const double hi = vol.bounds->upper * vol.bounds->upper;
            if (s.sigma_sq[k] < lo || s.sigma_sq[k] > hi || s.sigma_bar_sq[k] < lo ||
                s.sigma_bar_sq[k] > hi) {
                throw DomainError("volatility curves leave their ellipticity bounds");
            }
        }
    }
    return s;
}

} // namespace detail

/// Population limit of the two-maturity ratio statistic,
/// (e^{-theta T2} - e^{-theta T1})^2 / (e^{-2 theta T2} - e^{-2 theta T1}).
///
/// Evaluated as -tanh(theta (T2 - T1) / 2), which is the same expression after
/// cancelling e^{-theta T1}; it maps (0, inf) onto (-1, 0), strictly decreasing.
inline double psi2(double theta, double T1, double T2) {
    detail::check_rate(theta);
    detail::check_pair(T1, T2);
    return -std::tanh(0.5 * theta * (T2 - T1));
}

/// Upper end of the range of psi3: ((T3 - T2) / (T2 - T1))^2.
inline double psi3_upper(double T1, double T2, double T3) {
    const double r = (T3 - T2) / (T2 - T1);
    return r * r;
}

/// log psi3, computed without under/overflow for large or tiny theta.
inline double log_psi3(double theta, double T1, double T2, double T3) {
    detail::check_rate(theta);
    detail::check_triple(T1, T2, T3);
    const double near = -std::expm1(-theta * (T2 - T1));
    const double far = -std::expm1(-theta * (T3 - T2));
    return 2.0 * (-theta * (T2 - T1) + std::log(far) - std::log(near));
}

/// Population limit of the three-maturity ratio statistic,
/// ((e^{-theta T3} - e^{-theta T2}) / (e^{-theta T2} - e^{-theta T1}))^2.
/// Strictly decreasing from psi3_upper(T1,T2,T3) at 0+ to 0 at infinity.
inline double psi3(double theta, double T1, double T2, double T3) {
    return std::exp(log_psi3(theta, T1, T2, T3));
}

/// Solves psi2(theta) = y for theta; y must lie strictly inside (-1, 0).
inline double invert_psi2(double y, double T1, double T2,
                          numerics::BisectionOptions opt = {}) {
    detail::check_pair(T1, T2);
    if (!(y > -1.0 && y < 0.0)) {
        throw OutOfRangeError("invert_psi2: value outside (-1, 0)");
    }
    return numerics::invert_monotone([&](double th) { return psi2(th, T1, T2); }, y, opt);
}

/// Solves psi3(theta) = y; y must lie strictly inside (0, psi3_upper).
inline double invert_psi3(double y, double T1, double T2, double T3,
                          numerics::BisectionOptions opt = {}) {
    detail::check_triple(T1, T2, T3);
    if (!(y > 0.0 && y < psi3_upper(T1, T2, T3))) {
        throw OutOfRangeError("invert_psi3: value outside (0, ((T3-T2)/(T2-T1))^2)");
    }
    // Bisect on log psi3 so the tolerance stays meaningful where psi3 is tiny;
    // the scaled tolerance still bounds |psi3 - y| by opt.abs_tol.
    opt.abs_tol /= std::max(1.0, y);
    return numerics::invert_monotone([&](double th) { return log_psi3(th, T1, T2, T3); },
                                     std::log(y), opt);
}

/// Covariance of (Delta X^1, Delta X^2) over [t0, t1] for deterministic
/// volatility and zero drift:
///
///   var_j = int e^{-2 theta (T_j - t)} sigma^2 dt + int sigma_bar^2 dt
///   cov   = int e^{-theta (T1 + T2 - 2t)} sigma^2 dt + int sigma_bar^2 dt
///
/// Integrals use composite Simpson with `subintervals` (>= 64) panels.
/// A vanishing curve is allowed (single-factor degeneracy); negative values are not.
inline IncrementCovariance increment_covariance(double theta, const VolCurves& vol, double t0,
                                                double t1, double T1, double T2,
                                                std::size_t subintervals = 64) {
    detail::check_rate(theta);
    detail::check_pair(T1, T2);
    if (!(t0 < t1) || t1 > T1 * (1.0 + 1e-12)) {
        throw DomainError("increment_covariance: need t0 < t1 <= T1");
    }
    if (subintervals < 64) {
        subintervals = 64;
    }
    auto s2 = [&](double t) {
        const double v = vol.sigma_sq(t);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DomainError("increment_covariance: sigma^2 must be non-negative");
        }
        return v;
    };
    auto b2 = [&](double t) {
        const double v = vol.sigma_bar_sq(t);
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DomainError("increment_covariance: sigma_bar^2 must be non-negative");
        }
        return v;
    };
    const double long_part = numerics::simpson(b2, t0, t1, subintervals);
    const double s11 = numerics::simpson(
        [&](double t) { return std::exp(-2.0 * theta * (T1 - t)) * s2(t); }, t0, t1, subintervals);
    const double s22 = numerics::simpson(
        [&](double t) { return std::exp(-2.0 * theta * (T2 - t)) * s2(t); }, t0, t1, subintervals);
    const double s12 = numerics::simpson(
        [&](double t) { return std::exp(-theta * (T1 + T2 - 2.0 * t)) * s2(t); }, t0, t1,
        subintervals);
    return {s11 + long_part, s22 + long_part, s12 + long_part};
}

/// Conditional asymptotic variance of the ratio estimator from curve samples:
///
///   V = (e^{theta T2} - e^{theta T1})^2 / (T2 - T1)^2
///       * int e^{2 theta t} sigma^2 sigma_bar^2 / (int e^{2 theta t} sigma^2)^2
inline double v_theta(double theta, double T1, double T2, const CurveSamples& samples) {
    detail::check_rate(theta);
    detail::check_pair(T1, T2);
    const auto I = detail::weighted_integrals(theta, samples);
    const double v = detail::rate_prefactor(theta, T1, T2) * I.w_s2_sb2 / (I.w_s2 * I.w_s2);
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw NumericalError("v_theta: non-positive or non-finite variance");
    }
    return v;
}

inline double v_theta(double theta, const VolCurves& vol, const MaturityGrid& grid) {
    detail::check_two_maturities(grid);
    return v_theta(theta, grid.maturity(0), grid.maturity(1), detail::sample_on_grid(vol, grid));
}

/// Semiparametric lower bound for the conditional variance:
///
///   V_opt = (e^{theta T2} - e^{theta T1})^2 / (T2 - T1)^2
///           / int e^{2 theta t} sigma^2 / sigma_bar^2
inline double v_opt(double theta, double T1, double T2, const CurveSamples& samples) {
    detail::check_rate(theta);
    detail::check_pair(T1, T2);
    for (double b : samples.sigma_bar_sq) {
        if (!(b > 0.0)) {
            throw DomainError("v_opt: sigma_bar^2 must be strictly positive");
        }
    }
    const auto I = detail::weighted_integrals(theta, samples);
    const double v = detail::rate_prefactor(theta, T1, T2) / I.w_s2_by_sb2;
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw NumericalError("v_opt: non-positive or non-finite variance");
    }
    return v;
}

inline double v_opt(double theta, const VolCurves& vol, const MaturityGrid& grid) {
    detail::check_two_maturities(grid);
    return v_opt(theta, grid.maturity(0), grid.maturity(1), detail::sample_on_grid(vol, grid));
}

/// Total Fisher information for theta over [0, T]; the reciprocal of v_opt.
inline double fisher_info_total(double theta, const VolCurves& vol, const MaturityGrid& grid) {
    detail::check_rate(theta);
    detail::check_two_maturities(grid);
    const double T1 = grid.maturity(0);
    const double T2 = grid.maturity(1);
    detail::check_pair(T1, T2);
    const auto I = detail::weighted_integrals(theta, detail::sample_on_grid(vol, grid));
    return I.w_s2_by_sb2 / detail::rate_prefactor(theta, T1, T2);
}

} // namespace hjm2f
