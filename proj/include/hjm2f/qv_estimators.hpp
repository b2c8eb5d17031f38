// SPDX-License-Identifier: Apache-2.0
/**
 * @file qv_estimators.hpp
 * @brief Realised quadratic-variation ratio estimators of theta
 */

#pragma once

#include "hjm2f/errors.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/numerics.hpp"
#include "hjm2f/simulator.hpp"

#include <cmath>
#include <optional>
#include <string>
#include <vector>

namespace hjm2f {

enum class EstimateStatus { Converged, OutOfRange };
enum class EstimateMethod { qv2, qv3, qvd, one_step };

inline std::string to_string(EstimateStatus s) {
    return s == EstimateStatus::Converged ? "Converged" : "OutOfRange";
}

inline std::string to_string(EstimateMethod m) {
    switch (m) {
    case EstimateMethod::qv2: return "qv2";
    case EstimateMethod::qv3: return "qv3";
    case EstimateMethod::qvd: return "qvd";
    case EstimateMethod::one_step: return "one_step";
    }
    return "?";
}

inline EstimateMethod parse_method(std::string s) {
    for (auto& c : s) {
        if (c == '-') c = '_';
    }
    if (s == "qv2") return EstimateMethod::qv2;
    if (s == "qv3") return EstimateMethod::qv3;
    if (s == "qvd") return EstimateMethod::qvd;
    if (s == "one_step") return EstimateMethod::one_step;
    throw DomainError("unknown estimator '" + s + "'");
}

struct ConfidenceInterval {
    double lo;
    double hi;
    double level;
};

/// Point estimate of theta with explicit convergence status.
///
/// An OutOfRange estimate carries no value: the ratio statistic fell outside
/// the range of the population map, so there is nothing to invert.
struct ThetaEstimate {
    std::optional<double> value;
    EstimateStatus status = EstimateStatus::OutOfRange;
    EstimateMethod method = EstimateMethod::qv2;
    std::optional<double> plugin_variance;
    std::optional<ConfidenceInterval> ci;
    std::string note;

    static ThetaEstimate converged(double v, EstimateMethod m) {
        ThetaEstimate e;
        e.value = v;
        e.status = EstimateStatus::Converged;
        e.method = m;
        return e;
    }

    static ThetaEstimate out_of_range(EstimateMethod m, std::string why = {}) {
        ThetaEstimate e;
        e.status = EstimateStatus::OutOfRange;
        e.method = m;
        e.note = std::move(why);
        return e;
    }

    [[nodiscard]] bool ok() const noexcept { return status == EstimateStatus::Converged; }
};

inline constexpr double kDenominatorGuard = 1e-30;

namespace detail {

inline void check_row(const PricePanel& panel, std::size_t r) {
    if (r >= panel.rows()) {
        throw DomainError("panel row index out of range");
    }
}

/// sum_i (Delta_i X^b - Delta_i X^a)^2
inline double differenced_qv(const PricePanel& panel, std::size_t a, std::size_t b) {
    auto xa = panel.row(a);
    auto xb = panel.row(b);
    double q = 0.0;
    for (std::size_t i = 1; i < xa.size(); ++i) {
        const double diff = (xb[i] - xb[i - 1]) - (xa[i] - xa[i - 1]);
        q += diff * diff;
    }
    return q;
}

} // namespace detail

/// Psi^n_{T1,T2} = sum (dX2 - dX1)^2 / sum (dX2^2 - dX1^2)
inline double ratio_stat_2(const PricePanel& panel, std::size_t j1 = 0, std::size_t j2 = 1) {
    detail::check_row(panel, j1);
    detail::check_row(panel, j2);
    auto x1 = panel.row(j1);
    auto x2 = panel.row(j2);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 1; i < x1.size(); ++i) {
        const double d1 = x1[i] - x1[i - 1];
        const double d2 = x2[i] - x2[i - 1];
        num += (d2 - d1) * (d2 - d1);
        den += d2 * d2 - d1 * d1;
    }
    if (std::abs(den) < kDenominatorGuard) {
        throw DegenerateError("ratio_stat_2: vanishing denominator");
    }
    return num / den;
}

/// Psi^n_{T1,T2,T3} = sum (dX3 - dX2)^2 / sum (dX2 - dX1)^2
inline double ratio_stat_3(const PricePanel& panel, std::size_t j1 = 0, std::size_t j2 = 1,
                           std::size_t j3 = 2) {
    detail::check_row(panel, j1);
    detail::check_row(panel, j2);
    detail::check_row(panel, j3);
    const double den = detail::differenced_qv(panel, j1, j2);
    if (std::abs(den) < kDenominatorGuard) {
        throw DegenerateError("ratio_stat_3: vanishing denominator");
    }
    return detail::differenced_qv(panel, j2, j3) / den;
}

/// Rate-optimal two-maturity estimator; rows j1 < j2 (defaults: first two).
inline ThetaEstimate theta_hat_2(const PricePanel& panel, std::size_t j1 = 0,
                                 std::size_t j2 = 1) {
    if (panel.rows() < 2) {
        throw DomainError("theta_hat_2: panel needs at least two rows");
    }
    const double psi = ratio_stat_2(panel, j1, j2);
    const double T1 = panel.grid().maturity(j1);
    const double T2 = panel.grid().maturity(j2);
    try {
        return ThetaEstimate::converged(invert_psi2(psi, T1, T2), EstimateMethod::qv2);
    } catch (const OutOfRangeError&) {
        return ThetaEstimate::out_of_range(EstimateMethod::qv2,
                                           "ratio " + std::to_string(psi) + " outside (-1, 0)");
    }
}

/// Three-maturity estimator built on the first three rows.
inline ThetaEstimate theta_hat_3(const PricePanel& panel) {
    if (panel.rows() < 3) {
        throw DomainError("theta_hat_3: panel needs at least three rows");
    }
    const double psi = ratio_stat_3(panel, 0, 1, 2);
    const auto& T = panel.grid().maturities();
    try {
        return ThetaEstimate::converged(invert_psi3(psi, T[0], T[1], T[2]), EstimateMethod::qv3);
    } catch (const OutOfRangeError&) {
        return ThetaEstimate::out_of_range(EstimateMethod::qv3,
                                           "ratio " + std::to_string(psi) + " outside psi3 range");
    }
}

/// Sum over consecutive maturity triples of the squared log-ratio residual
/// [log Q_{j+1,j+2} - log Q_{j,j+1} - log psi3(theta; T_j, T_{j+1}, T_{j+2})]^2.
/// `log_q[j]` holds log Q_{j,j+1}.
inline double qvd_objective(double theta, const std::vector<double>& log_q,
                            const std::vector<double>& maturities) {
    double acc = 0.0;
    for (std::size_t j = 0; j + 2 < maturities.size(); ++j) {
        const double r = log_q[j + 1] - log_q[j] -
                         log_psi3(theta, maturities[j], maturities[j + 1], maturities[j + 2]);
        acc += r * r;
    }
    return acc;
}

/// Multi-maturity estimator for d >= 3: least squares on log ratios over all
/// consecutive triples, minimised by golden section in log(theta) over
/// [1e-6, 1e3]. A minimiser pinned to either end of the bracket is reported
/// as OutOfRange. With three rows this is theta_hat_3 whenever that is in range.
inline ThetaEstimate theta_hat_d(const PricePanel& panel) {
    if (panel.rows() < 3) {
        throw DomainError("theta_hat_d: panel needs at least three rows");
    }
    const auto& T = panel.grid().maturities();
    std::vector<double> log_q;
    for (std::size_t j = 0; j + 1 < panel.rows(); ++j) {
        const double q = detail::differenced_qv(panel, j, j + 1);
        if (!(q > kDenominatorGuard)) {
            throw DegenerateError("theta_hat_d: vanishing differenced quadratic variation");
        }
        log_q.push_back(std::log(q));
    }
    const double lo = std::log(1e-6);
    const double hi = std::log(1e3);
    auto obj = [&](double u) { return qvd_objective(std::exp(u), log_q, T); };
    const auto best = numerics::golden_section_min(obj, lo, hi, 1e-14);
    const double edge = 1e-6 * (hi - lo);
    if (best.x - lo < edge || hi - best.x < edge || !std::isfinite(best.value)) {
        return ThetaEstimate::out_of_range(EstimateMethod::qvd, "minimiser on bracket boundary");
    }
    return ThetaEstimate::converged(std::exp(best.x), EstimateMethod::qvd);
}

} // namespace hjm2f
