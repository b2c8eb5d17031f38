// SPDX-License-Identifier: Apache-2.0
/**
 * @file nonparam_vol.hpp
 * @brief Kernel reconstruction of the two squared-volatility paths
 *
 * The spot quadratic-variation densities of two maturities,
 *
 *   c_j(t) = e^{-2 theta (T_j - t)} sigma_t^2 + sigma_bar_t^2,  j = 1, 2,
 *
 * are estimated with the causal kernel 1_(0,1] and bandwidth h, then the 2x2
 * system M(theta)_t is inverted to separate sigma_t^2 from sigma_bar_t^2.
 */

#pragma once

#include "hjm2f/errors.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <optional>
#include <ostream>
#include <vector>

namespace hjm2f {

/// Default lower threshold on the plug-in rate, 0.0365 / yr.
inline constexpr double kDefaultFloorTheta = 3.65e-2;

/// Box [lo, hi] on the squared-volatility scale, i.e. [c_lo^2, c_hi^2].
struct ClampBox {
    double lo;
    double hi;

    [[nodiscard]] double apply(double v) const { return std::clamp(v, lo, hi); }
};

/// Pointwise estimates on the observation dates t_k = k * delta, k >= first_index,
/// which are exactly the grid dates inside [bandwidth, horizon].
struct VolCurveEstimate {
    std::vector<double> times;
    std::vector<double> sigma_sq_raw;
    std::vector<double> sigma_sq;
    std::vector<double> sigma_bar_sq_raw;
    std::vector<double> sigma_bar_sq;
    double bandwidth = 0.0;
    double floor_theta = kDefaultFloorTheta;
    double theta_used = 0.0; ///< max(theta_hat, floor_theta)
    std::optional<ClampBox> clamp_box;
    double delta = 0.0;
    std::size_t first_index = 0;
    double T1 = 0.0;
    double T2 = 0.0;

    [[nodiscard]] std::size_t size() const noexcept { return times.size(); }

    /// Estimate of sigma_bar^2 at grid index k (time k * delta), if produced.
    [[nodiscard]] std::optional<double> sigma_bar_sq_at_index(std::size_t k) const {
        if (k < first_index || k - first_index >= times.size()) {
            return std::nullopt;
        }
        return sigma_bar_sq[k - first_index];
    }

    /// Curves as equally spaced samples (sigma_bar^2 clamped when a box is set).
    [[nodiscard]] CurveSamples samples() const {
        return {times.front(), delta, sigma_sq, sigma_bar_sq};
    }

    /// Re-applies a clamp box to the raw sigma_bar^2 values.
    [[nodiscard]] VolCurveEstimate with_clamp(std::optional<ClampBox> box) const {
        VolCurveEstimate out = *this;
        out.clamp_box = box;
        for (std::size_t k = 0; k < times.size(); ++k) {
            out.sigma_sq[k] = sigma_sq_raw[k];
            out.sigma_bar_sq[k] = box ? box->apply(sigma_bar_sq_raw[k]) : sigma_bar_sq_raw[k];
        }
        return out;
    }
};

namespace detail {

/// Prefix sums of squared increments of one row: p[m] = sum_{i<m} dX_i^2.
inline std::vector<double> squared_increment_prefix(const PricePanel& panel, std::size_t row) {
    auto x = panel.row(row);
    std::vector<double> p(x.size(), 0.0);
    for (std::size_t i = 1; i < x.size(); ++i) {
        const double d = x[i] - x[i - 1];
        p[i] = p[i - 1] + d * d;
    }
    return p;
}

/// First grid index k with k * delta >= h.
inline std::size_t first_index_for(double h, double delta) {
    return static_cast<std::size_t>(std::ceil(h / delta - 1e-9));
}

/// Lowest increment index m with m * delta >= t_k - h.
inline std::size_t window_start(std::size_t k, double h, double delta) {
    const double lo = static_cast<double>(k) - h / delta - 1e-9;
    return lo <= 0.0 ? 0 : static_cast<std::size_t>(std::ceil(lo));
}

struct MInverse {
    double a1; ///< e^{-2 theta (T1 - t)}
    double a2; ///< e^{-2 theta (T2 - t)}

    MInverse(double theta, double t, double T1, double T2)
        : a1(std::exp(-2.0 * theta * (T1 - t))), a2(std::exp(-2.0 * theta * (T2 - t))) {
        if (std::abs(a1 - a2) < 1e-14) {
            throw IllConditionedError("volatility inversion is singular at t = " +
                                      std::to_string(t));
        }
    }

    /// (sigma^2, sigma_bar^2) = M(theta)_t (c1, c2)
    [[nodiscard]] std::pair<double, double> apply(double c1, double c2) const {
        const double det = a1 - a2;
        return {(c1 - c2) / det, (a1 * c2 - a2 * c1) / det};
    }
};

} // namespace detail

/// Applies M(theta)_t to (c1, c2). Exposed for the inversion-identity checks.
inline std::pair<double, double> invert_qv_densities(double theta, double t, double T1, double T2,
                                                     double c1, double c2) {
    return detail::MInverse(theta, t, T1, T2).apply(c1, c2);
}

/// Kernel estimates of sigma_t^2 and sigma_bar_t^2 from rows (j1, j2).
///
/// At each grid date t in [h, T] the squared increments with
/// t - h <= (i-1) delta < t are summed, scaled by 1/h, and mapped through
/// M(max(theta_hat, floor_theta))_t. When a clamp box is given sigma_bar^2 is
/// clamped into it; raw values are always kept.
inline VolCurveEstimate estimate_vol_curves(const PricePanel& panel, double theta_hat,
                                            double bandwidth,
                                            double floor_theta = kDefaultFloorTheta,
                                            std::optional<ClampBox> clamp_box = std::nullopt,
                                            std::size_t j1 = 0, std::size_t j2 = 1) {
    if (panel.rows() < 2 || j1 >= panel.rows() || j2 >= panel.rows() || j1 == j2) {
        throw DomainError("estimate_vol_curves: need two distinct rows");
    }
    const auto& grid = panel.grid();
    const double delta = grid.delta();
    if (!(bandwidth >= delta * (1.0 - 1e-9))) {
        throw DomainError("estimate_vol_curves: bandwidth must be at least delta");
    }
    if (!(floor_theta > 0.0)) {
        throw DomainError("estimate_vol_curves: floor_theta must be positive");
    }
    const std::size_t n = grid.n_obs();
    const std::size_t k0 = detail::first_index_for(bandwidth, delta);
    if (k0 > n) {
        throw DomainError("estimate_vol_curves: bandwidth exceeds the horizon");
    }

    VolCurveEstimate est;
    est.bandwidth = bandwidth;
    est.floor_theta = floor_theta;
    est.theta_used = std::max(theta_hat, floor_theta);
    est.clamp_box = clamp_box;
    est.delta = delta;
    est.first_index = k0;
    est.T1 = grid.maturity(j1);
    est.T2 = grid.maturity(j2);

    const auto p1 = detail::squared_increment_prefix(panel, j1);
    const auto p2 = detail::squared_increment_prefix(panel, j2);
    for (std::size_t k = k0; k <= n; ++k) {
        const double t = grid.time(k);
        const std::size_t m0 = detail::window_start(k, bandwidth, delta);
        const double c1 = (p1[k] - p1[m0]) / bandwidth;
        const double c2 = (p2[k] - p2[m0]) / bandwidth;
        const auto [s2, b2] = detail::MInverse(est.theta_used, t, est.T1, est.T2).apply(c1, c2);
        est.times.push_back(t);
        est.sigma_sq_raw.push_back(s2);
        est.sigma_bar_sq_raw.push_back(b2);
        est.sigma_sq.push_back(s2);
        est.sigma_bar_sq.push_back(clamp_box ? clamp_box->apply(b2) : b2);
    }
    return est;
}

/// Leave-one-out prediction error of squared increments,
///
///   sum_{j=1,2} sum_{m >= start} [ (Delta_{m+1} X^j)^2 - delta * c_hat_j(m delta) ]^2,
///
/// where c_hat_j = e^{-2 theta (T_j - t)} sigma_hat^2 + sigma_bar_hat^2 is the
/// fitted spot density. The causal window at m * delta never contains
/// increment m + 1, so the kernel estimate is already leave-one-out.
inline double cv_criterion(const PricePanel& panel, double theta_hat, double bandwidth,
                           std::size_t start_index, double floor_theta = kDefaultFloorTheta) {
    const auto est = estimate_vol_curves(panel, theta_hat, bandwidth, floor_theta);
    const double delta = panel.grid().delta();
    const std::size_t n = panel.grid().n_obs();
    if (start_index < est.first_index) {
        throw DomainError("cv_criterion: start index precedes the first estimate");
    }
    double crit = 0.0;
    for (std::size_t row = 0; row < 2; ++row) {
        const auto dx = panel.increments(row);
        const double Tj = row == 0 ? est.T1 : est.T2;
        for (std::size_t m = start_index; m < n; ++m) {
            const std::size_t k = m - est.first_index;
            const double t = est.times[k];
            const double c = std::exp(-2.0 * est.theta_used * (Tj - t)) * est.sigma_sq_raw[k] +
                             est.sigma_bar_sq_raw[k];
            const double r = dx[m] * dx[m] - delta * c;
            crit += r * r;
        }
    }
    return crit;
}

/// Candidate bandwidth minimising cv_criterion on a common evaluation range
/// (dates at or beyond the largest candidate). Ties go to the larger bandwidth.
inline double cv_bandwidth(const PricePanel& panel, double theta_hat,
                           std::vector<double> candidates,
                           double floor_theta = kDefaultFloorTheta) {
    if (candidates.empty()) {
        throw DomainError("cv_bandwidth: no candidate bandwidths");
    }
    if (candidates.size() == 1) {
        return candidates.front();
    }
    const double delta = panel.grid().delta();
    for (double h : candidates) {
        if (!(h >= 2.0 * delta * (1.0 - 1e-9))) {
            throw DomainError("cv_bandwidth: candidates must be at least 2 * delta");
        }
    }
    std::sort(candidates.begin(), candidates.end());
    const std::size_t start = detail::first_index_for(candidates.back(), delta);
    if (start >= panel.grid().n_obs()) {
        throw DomainError("cv_bandwidth: largest candidate leaves no evaluation dates");
    }
    double best_h = candidates.front();
    double best = std::numeric_limits<double>::infinity();
    for (double h : candidates) {
        const double c = cv_criterion(panel, theta_hat, h, start, floor_theta);
        if (c <= best * (1.0 + 1e-12)) {
            best = std::min(best, c);
            best_h = h;
        }
    }
    return best_h;
}

/// Header `t_years,sigma_sq_raw,sigma_sq,sigma_bar_sq_raw,sigma_bar_sq`.
inline void write_curves_csv(std::ostream& os, const VolCurveEstimate& est) {
    os << "t_years,sigma_sq_raw,sigma_sq,sigma_bar_sq_raw,sigma_bar_sq\n" << std::setprecision(17);
    for (std::size_t k = 0; k < est.size(); ++k) {
        os << est.times[k] << ',' << est.sigma_sq_raw[k] << ',' << est.sigma_sq[k] << ','
           << est.sigma_bar_sq_raw[k] << ',' << est.sigma_bar_sq[k] << '\n';
    }
}

} // namespace hjm2f
