// SPDX-License-Identifier: Apache-2.0
/**
 * @file efficient_estimator.hpp
 * @brief Efficient score, one-step corrected estimator and feasible intervals
 */

#pragma once

#include "hjm2f/errors.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/nonparam_vol.hpp"
#include "hjm2f/numerics.hpp"
#include "hjm2f/qv_estimators.hpp"
#include "hjm2f/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hjm2f {

/// Score evaluated at a single increment pair with explicit nuisance value mu:
///
///   (dx2 - dx1)(dx2 - r dx1) r (T2 - T1) / ((1 - r)^3 delta mu),  r = e^{-theta (T2 - T1)}
inline double efficient_score_value(double dx1, double dx2, double theta, double T1, double T2,
                                    double delta, double mu) {
    const double D = T2 - T1;
    const double r = std::exp(-theta * D);
    const double one_minus_r = -std::expm1(-theta * D);
    if (!(std::abs(one_minus_r) >= 1e-10)) {
        throw DomainError("efficient_score: theta * (T2 - T1) too small");
    }
    return (dx2 - dx1) * (dx2 - r * dx1) * r * D /
           (one_minus_r * one_minus_r * one_minus_r * delta * mu);
}

/// Per-increment information (T2-T1)^2 / (e^{theta (T2-T1)} - 1)^2 * S / L, where
/// S = int e^{-2 theta (T1 - t)} sigma^2 dt and L = int sigma_bar^2 dt over the cell.
inline double score_information(double theta, double T1, double T2, double s_integral,
                                double l_integral) {
    const double D = T2 - T1;
    const double g = std::expm1(theta * D);
    return D * D / (g * g) * s_integral / l_integral;
}

/// Everything the score needs beyond the increments. The index set is the
/// contiguous range of increments m (covering [m delta, (m+1) delta]) with
/// h <= m delta < T; `sigma_bar_sq_at[m - first_increment]` is the plug-in
/// value of sigma_bar^2 at m delta.
struct ScoreContext {
    double theta = 0.0;
    double delta = 0.0;
    double T1 = 0.0;
    double T2 = 0.0;
    std::size_t first_increment = 0;
    std::vector<double> sigma_bar_sq_at;

    [[nodiscard]] std::size_t size() const noexcept { return sigma_bar_sq_at.size(); }
    [[nodiscard]] bool contains(std::size_t m) const noexcept {
        return m >= first_increment && m - first_increment < sigma_bar_sq_at.size();
    }

    void validate() const {
        detail::check_rate(theta);
        detail::check_pair(T1, T2);
        if (!(delta > 0.0)) {
            throw DomainError("score context: delta must be positive");
        }
        if (sigma_bar_sq_at.empty()) {
            throw DomainError("score context: empty index set");
        }
        for (double v : sigma_bar_sq_at) {
            if (!(v > 0.0) || !std::isfinite(v)) {
                throw DomainError("score context: sigma_bar^2 plug-in must be strictly positive");
            }
        }
    }
};

/// Efficient score of increment m.
inline double efficient_score(double dx1, double dx2, const ScoreContext& ctx, std::size_t m) {
    if (!ctx.contains(m)) {
        throw DomainError("efficient_score: increment outside the index set");
    }
    return efficient_score_value(dx1, dx2, ctx.theta, ctx.T1, ctx.T2, ctx.delta,
                                 ctx.sigma_bar_sq_at[m - ctx.first_increment]);
}

/// Builds the score context over {m : h <= m delta < T} from estimated curves.
inline ScoreContext make_score_context(const PricePanel& panel, double theta,
                                       const VolCurveEstimate& vol,
                                       std::optional<ClampBox> clamp = std::nullopt) {
    const std::size_t n = panel.grid().n_obs();
    ScoreContext ctx;
    ctx.theta = theta;
    ctx.delta = panel.grid().delta();
    ctx.T1 = panel.grid().maturity(0);
    ctx.T2 = panel.grid().maturity(1);
    ctx.first_increment = vol.first_index;
    for (std::size_t m = vol.first_index; m < n; ++m) {
        const auto mu = vol.sigma_bar_sq_at_index(m);
        if (!mu) {
            throw DomainError("one_step: volatility curve does not cover the index set");
        }
        ctx.sigma_bar_sq_at.push_back(clamp ? clamp->apply(*mu) : *mu);
    }
    ctx.validate();
    return ctx;
}

struct OneStepOptions {
    /// Snap the preliminary estimate down to the grid sqrt(delta) * Z before
    /// the Newton step.
    bool discretize_prelim = true;
    /// Box for sigma_bar^2 plug-ins; off by default.
    std::optional<ClampBox> clamp;
};

/// sqrt(delta) * floor(theta / sqrt(delta))
inline double discretize_rate(double theta, double delta) {
    const double s = std::sqrt(delta);
    return s * std::floor(theta / s);
}

/// One Newton step along the efficient score from the preliminary estimate:
/// theta_tilde = theta_0 + sum l / sum l^2 over the index set.
inline ThetaEstimate one_step(const PricePanel& panel, const ThetaEstimate& prelim,
                              const VolCurveEstimate& vol, const OneStepOptions& opt = {}) {
    if (!prelim.ok()) {
        ThetaEstimate out = prelim;
        out.method = EstimateMethod::one_step;
        return out;
    }
    if (panel.rows() < 2) {
        throw DomainError("one_step: panel needs at least two rows");
    }
    const double delta = panel.grid().delta();
    double theta0 = *prelim.value;
    std::string note;
    if (opt.discretize_prelim) {
        const double snapped = discretize_rate(theta0, delta);
        if (snapped > 0.0) {
            theta0 = snapped;
        } else {
            note = "discretised preliminary estimate not positive; using it undiscretised";
        }
    }
    const auto ctx = make_score_context(panel, theta0, vol, opt.clamp);
    const auto dx1 = panel.increments(0);
    const auto dx2 = panel.increments(1);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t m = ctx.first_increment; m < ctx.first_increment + ctx.size(); ++m) {
        const double l = efficient_score(dx1[m], dx2[m], ctx, m);
        num += l;
        den += l * l;
    }
    if (den == 0.0) {
        auto out = ThetaEstimate::converged(theta0, EstimateMethod::one_step);
        out.note = "all scores vanish; no correction applied";
        return out;
    }
    const double value = theta0 + num / den;
    if (!(value > 0.0) || !std::isfinite(value)) {
        return ThetaEstimate::out_of_range(EstimateMethod::one_step,
                                           "corrected estimate not a positive rate");
    }
    auto out = ThetaEstimate::converged(value, EstimateMethod::one_step);
    out.note = std::move(note);
    return out;
}

/// Default plug-in window for interval variances, as a fraction of the horizon.
/// v_opt weighs 1 / sigma_bar^2, which a two-week kernel estimate pushes toward
/// zero often enough to shrink the variance several-fold.
inline constexpr double kDefaultCiBandwidthFraction = 0.4;

/// Bandwidth for the curves behind an interval: max(h, fraction * T), capped
/// so that at least two curve points remain.
inline double ci_bandwidth(double h, const MaturityGrid& grid,
                           double fraction = kDefaultCiBandwidthFraction) {
    if (!(fraction >= 0.0 && fraction < 1.0)) {
        throw DomainError("ci_bandwidth: fraction must lie in [0, 1)");
    }
    const double cap = grid.horizon() - grid.delta();
    return std::max(h, std::min(fraction * grid.horizon(), cap));
}

/// Plug-in asymptotic variance on the theta scale. The curves only exist on
/// [h, T], so both integrals are taken there and scaled by T / (T - h).
inline double plugin_asymptotic_variance(const ThetaEstimate& est, const VolCurveEstimate& vol,
                                         const MaturityGrid& grid) {
    if (!est.ok()) {
        throw DomainError("confidence_interval: estimate did not converge");
    }
    if (vol.size() < 2) {
        throw DomainError("confidence_interval: need at least two curve points");
    }
    const double T = grid.horizon();
    const double scale = T / (T - vol.times.front());
    const auto samples = vol.samples();
    const double T1 = grid.maturity(0);
    const double T2 = grid.maturity(1);
    switch (est.method) {
    case EstimateMethod::qv2: return v_theta(*est.value, T1, T2, samples) / scale;
    case EstimateMethod::one_step: return v_opt(*est.value, T1, T2, samples) / scale;
    default: throw DomainError("confidence_interval: no variance theory for " + to_string(est.method));
    }
}

/// Feasible interval value -/+ z_{(1+level)/2} sqrt(delta * V_hat), with V_hat from
/// v_theta for qv2 and from v_opt for one_step.
inline ThetaEstimate confidence_interval(const ThetaEstimate& est, const VolCurveEstimate& vol,
                                         const MaturityGrid& grid, double level = 0.95) {
    if (!(level > 0.0 && level < 1.0)) {
        throw DomainError("confidence_interval: level must lie in (0, 1)");
    }
    const double v = grid.delta() * plugin_asymptotic_variance(est, vol, grid);
    const double half = numerics::normal_quantile(0.5 * (1.0 + level)) * std::sqrt(v);
    ThetaEstimate out = est;
    out.plugin_variance = v;
    out.ci = ConfidenceInterval{*est.value - half, *est.value + half, level};
    return out;
}

} // namespace hjm2f
