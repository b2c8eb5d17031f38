// SPDX-License-Identifier: Apache-2.0
/**
 * @file mc_harness.hpp
 * @brief Replication studies: estimator tables, volatility bands, rate and
 *        Riemann-functional diagnostics
 */

#pragma once

#include "hjm2f/efficient_estimator.hpp"
#include "hjm2f/errors.hpp"
#include "hjm2f/model_core.hpp"
#include "hjm2f/nonparam_vol.hpp"
#include "hjm2f/parallel.hpp"
#include "hjm2f/qv_estimators.hpp"
#include "hjm2f/simulator.hpp"
#include "hjm2f/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <map>
#include <numbers>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace hjm2f {

enum class VolMode { constant, cir_like, custom };
enum class DriftMode { mean_revert, zero };

/// How the kernel bandwidth is chosen in each replication.
struct BandwidthRule {
    enum class Kind { fixed_days, cv, delta_power };
    Kind kind = Kind::fixed_days;
    double value = 14.0; ///< days for fixed_days, exponent for delta_power

    [[nodiscard]] std::string describe() const {
        std::ostringstream os;
        switch (kind) {
        case Kind::fixed_days: os << value; break;
        case Kind::cv: os << "cv"; break;
        case Kind::delta_power: os << "delta_power:" << value; break;
        }
        return os.str();
    }
};

/// One replication study. Parsed from `key = value` text, `#` starts a comment.
///
/// Keys: config_id, theta_true, vol_mode, sigma, sigma_bar, sigma_sq_slope,
/// sigma_bar_sq_slope, drift, replications, seed0, estimators, bandwidth,
/// cv_candidates_days, trim, n_obs, substeps, discretize_prelim, clamp, ci,
/// ci_level, ci_bandwidth_fraction, vol_curves, threads.
struct ExperimentConfig {
    ConfigId config_id = ConfigId::d2;
    double theta_true = 1.4;
    VolMode vol_mode = VolMode::cir_like;
    /// constant / custom modes: sigma^2(t) = sigma^2 (1 + sigma_sq_slope t / T),
    /// sigma_bar^2(t) = sigma_bar^2 (1 + sigma_bar_sq_slope t / T)
    double sigma = 0.37;
    double sigma_bar = 0.15;
    double sigma_sq_slope = 0.0;
    double sigma_bar_sq_slope = 0.0;
    DriftMode drift = DriftMode::mean_revert;
    std::size_t replications = 2000;
    std::uint64_t seed0 = 1;
    std::vector<EstimateMethod> estimators{EstimateMethod::qv2};
    BandwidthRule bandwidth;
    std::vector<double> cv_candidates_days{7, 14, 21, 28, 35, 42, 49};
    double trim = 0.001;
    std::optional<std::size_t> n_obs;
    std::size_t substeps = 10;
    bool discretize_prelim = false;
    std::optional<ClampBox> clamp = ClampBox{1e-4, 1e2};
    bool ci = false;
    double ci_level = 0.95;
    double ci_bandwidth_fraction = kDefaultCiBandwidthFraction;
    bool vol_curves = false;
    unsigned threads = 0;

    void validate() const {
        if (replications < 1) {
            throw ValidationError("experiment: replications must be >= 1");
        }
        if (!(trim >= 0.0 && trim <= 0.05)) {
            throw ValidationError("experiment: trim must lie in [0, 0.05]");
        }
        if (!(theta_true > 0.0)) {
            throw ValidationError("experiment: theta_true must be positive");
        }
        if (estimators.empty()) {
            throw ValidationError("experiment: no estimators requested");
        }
        if (!(ci_level > 0.0 && ci_level < 1.0)) {
            throw ValidationError("experiment: ci_level must lie in (0, 1)");
        }
        if (!(ci_bandwidth_fraction >= 0.0 && ci_bandwidth_fraction < 1.0)) {
            throw ValidationError("experiment: ci_bandwidth_fraction must lie in [0, 1)");
        }
        if (clamp && !(clamp->lo > 0.0 && clamp->lo < clamp->hi)) {
            throw ValidationError("experiment: clamp needs 0 < lo < hi");
        }
        if (n_obs && *n_obs < 2) {
            throw ValidationError("experiment: n_obs must be >= 2");
        }
        const std::size_t d = reference_grid(config_id).dimension();
        for (auto m : estimators) {
            if ((m == EstimateMethod::qv3 || m == EstimateMethod::qvd) && d < 3) {
                throw ValidationError("experiment: " + to_string(m) + " needs at least 3 maturities");
            }
        }
    }

    [[nodiscard]] bool wants(EstimateMethod m) const {
        return std::find(estimators.begin(), estimators.end(), m) != estimators.end();
    }

    [[nodiscard]] MaturityGrid grid() const {
        auto g = reference_grid(config_id);
        return n_obs ? g.with_n_obs(*n_obs) : g;
    }

    [[nodiscard]] ModelSpec model_spec() const {
        auto spec = paper_config(config_id, theta_true).spec;
        if (drift == DriftMode::zero) {
            spec.drift = ZeroDrift{};
        }
        const double T = grid().horizon();
        switch (vol_mode) {
        case VolMode::cir_like: break;
        case VolMode::constant: spec.vol = ConstantVol{sigma, sigma_bar}; break;
        case VolMode::custom: {
            const double s2 = sigma * sigma;
            const double b2 = sigma_bar * sigma_bar;
            const double ks = sigma_sq_slope;
            const double kb = sigma_bar_sq_slope;
            spec.vol = DeterministicVol{VolCurves{[=](double t) { return s2 * (1.0 + ks * t / T); },
                                                  [=](double t) { return b2 * (1.0 + kb * t / T); },
                                                  std::nullopt}};
            break;
        }
        }
        return spec;
    }

    static ExperimentConfig parse(std::istream& is);
};

namespace detail {

inline std::string trim_copy(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return {};
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim_copy(item);
        if (!item.empty()) {
            out.push_back(item);
        }
    }
    return out;
}

inline double parse_double(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(s, &pos);
        if (pos != s.size()) {
            throw ParseError("trailing characters in number '" + s + "'", line);
        }
        return v;
    } catch (const std::logic_error&) {
        throw ParseError("expected a number, got '" + s + "'", line);
    }
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line) {
    try {
        std::size_t pos = 0;
        const auto v = std::stoull(s, &pos);
        if (pos != s.size() || s.front() == '-') {
            throw ParseError("expected a non-negative integer, got '" + s + "'", line);
        }
        return v;
    } catch (const std::logic_error&) {
        throw ParseError("expected a non-negative integer, got '" + s + "'", line);
    }
}

inline bool parse_bool(const std::string& s, std::size_t line) {
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ParseError("expected a boolean, got '" + s + "'", line);
}

} // namespace detail

inline BandwidthRule parse_bandwidth_rule(const std::string& s, std::size_t line = 0) {
    BandwidthRule rule;
    if (s == "cv") {
        rule.kind = BandwidthRule::Kind::cv;
    } else if (s.rfind("delta_power:", 0) == 0) {
        rule.kind = BandwidthRule::Kind::delta_power;
        rule.value = detail::parse_double(s.substr(12), line);
    } else {
        rule.kind = BandwidthRule::Kind::fixed_days;
        rule.value = detail::parse_double(s, line);
    }
    return rule;
}

inline ExperimentConfig ExperimentConfig::parse(std::istream& is) {
    ExperimentConfig cfg;
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(is, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = detail::trim_copy(raw.substr(0, hash));
        if (line.empty()) {
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ParseError("expected key = value", line_no);
        }
        const std::string key = detail::trim_copy(line.substr(0, eq));
        const std::string val = detail::trim_copy(line.substr(eq + 1));
        try {
            if (key == "config_id") {
                cfg.config_id = parse_config_id(val);
            } else if (key == "theta_true") {
                cfg.theta_true = detail::parse_double(val, line_no);
            } else if (key == "vol_mode") {
                if (val == "constant") cfg.vol_mode = VolMode::constant;
                else if (val == "cir_like") cfg.vol_mode = VolMode::cir_like;
                else if (val == "custom") cfg.vol_mode = VolMode::custom;
                else throw ParseError("unknown vol_mode '" + val + "'", line_no);
            } else if (key == "sigma") {
                cfg.sigma = detail::parse_double(val, line_no);
            } else if (key == "sigma_bar") {
                cfg.sigma_bar = detail::parse_double(val, line_no);
            } else if (key == "sigma_sq_slope") {
                cfg.sigma_sq_slope = detail::parse_double(val, line_no);
            } else if (key == "sigma_bar_sq_slope") {
                cfg.sigma_bar_sq_slope = detail::parse_double(val, line_no);
            } else if (key == "drift") {
                if (val == "mean_revert") cfg.drift = DriftMode::mean_revert;
                else if (val == "zero") cfg.drift = DriftMode::zero;
                else throw ParseError("unknown drift '" + val + "'", line_no);
            } else if (key == "replications") {
                cfg.replications = detail::parse_u64(val, line_no);
            } else if (key == "seed0") {
                cfg.seed0 = detail::parse_u64(val, line_no);
            } else if (key == "estimators") {
                cfg.estimators.clear();
                for (const auto& m : detail::split_list(val)) {
                    cfg.estimators.push_back(parse_method(m));
                }
            } else if (key == "bandwidth") {
                cfg.bandwidth = parse_bandwidth_rule(val, line_no);
            } else if (key == "cv_candidates_days") {
                cfg.cv_candidates_days.clear();
                for (const auto& h : detail::split_list(val)) {
                    cfg.cv_candidates_days.push_back(detail::parse_double(h, line_no));
                }
            } else if (key == "trim") {
                cfg.trim = detail::parse_double(val, line_no);
            } else if (key == "n_obs") {
                cfg.n_obs = detail::parse_u64(val, line_no);
            } else if (key == "substeps") {
                cfg.substeps = detail::parse_u64(val, line_no);
            } else if (key == "discretize_prelim") {
                cfg.discretize_prelim = detail::parse_bool(val, line_no);
            } else if (key == "clamp") {
                if (val == "none") {
                    cfg.clamp.reset();
                } else {
                    const auto parts = detail::split_list(val);
                    if (parts.size() != 2) {
                        throw ParseError("clamp expects 'none' or 'lo,hi'", line_no);
                    }
                    cfg.clamp = ClampBox{detail::parse_double(parts[0], line_no),
                                         detail::parse_double(parts[1], line_no)};
                }
            } else if (key == "ci") {
                cfg.ci = detail::parse_bool(val, line_no);
            } else if (key == "ci_level") {
                cfg.ci_level = detail::parse_double(val, line_no);
            } else if (key == "ci_bandwidth_fraction") {
                cfg.ci_bandwidth_fraction = detail::parse_double(val, line_no);
            } else if (key == "vol_curves") {
                cfg.vol_curves = detail::parse_bool(val, line_no);
            } else if (key == "threads") {
                cfg.threads = static_cast<unsigned>(detail::parse_u64(val, line_no));
            } else {
                throw ParseError("unknown key '" + key + "'", line_no);
            }
        } catch (const ParseError&) {
            throw;
        } catch (const Error& e) {
            throw ParseError(e.what(), line_no);
        }
    }
    cfg.validate();
    return cfg;
}

// Replications -------------------------------------------------------------

/// Everything recorded from one simulated panel.
struct ReplicationResult {
    std::map<EstimateMethod, ThetaEstimate> estimates;
    std::optional<double> bandwidth;
    /// Curve values (or errors against the simulated path in cir_like mode)
    /// by grid index; NaN where not produced.
    std::vector<double> sigma_sq;
    std::vector<double> sigma_bar_sq;
};

namespace detail {

inline double select_bandwidth(const ExperimentConfig& cfg, const PricePanel& panel,
                               double theta_for_vol) {
    const double delta = panel.grid().delta();
    switch (cfg.bandwidth.kind) {
    case BandwidthRule::Kind::fixed_days: return days_to_years(cfg.bandwidth.value);
    case BandwidthRule::Kind::delta_power: return std::pow(delta, cfg.bandwidth.value);
    case BandwidthRule::Kind::cv: {
        std::vector<double> cands;
        for (double hd : cfg.cv_candidates_days) {
            cands.push_back(days_to_years(hd));
        }
        return cv_bandwidth(panel, theta_for_vol, cands);
    }
    }
    return days_to_years(cfg.bandwidth.value);
}

inline ThetaEstimate guarded(EstimateMethod m, const auto& fn) {
    try {
        return fn();
    } catch (const Error& e) {
        return ThetaEstimate::out_of_range(m, e.what());
    }
}

} // namespace detail

/// Runs every requested estimator on one simulated panel. Library errors are
/// recorded as non-converged estimates, never raised.
inline ReplicationResult run_replication(const ExperimentConfig& cfg, const ModelSpec& spec,
                                         const MaturityGrid& grid, std::uint64_t seed) {
    ReplicationResult res;
    const auto panel = simulate_panel(spec, grid, seed, cfg.substeps);
    const bool need_vol = cfg.wants(EstimateMethod::one_step) || cfg.vol_curves || cfg.ci;

    const auto qv2 = detail::guarded(EstimateMethod::qv2, [&] { return theta_hat_2(panel); });
    if (cfg.wants(EstimateMethod::qv3)) {
        res.estimates[EstimateMethod::qv3] =
            detail::guarded(EstimateMethod::qv3, [&] { return theta_hat_3(panel); });
    }
    if (cfg.wants(EstimateMethod::qvd)) {
        res.estimates[EstimateMethod::qvd] =
            detail::guarded(EstimateMethod::qvd, [&] { return theta_hat_d(panel); });
    }

    std::optional<VolCurveEstimate> vol;
    std::optional<VolCurveEstimate> ci_vol;
    if (need_vol) {
        try {
            const double th = qv2.ok() ? *qv2.value : 0.0;
            const double h = detail::select_bandwidth(cfg, panel, th);
            res.bandwidth = h;
            vol = estimate_vol_curves(panel, th, h);
            if (cfg.ci) {
                ci_vol = estimate_vol_curves(panel, th,
                                             ci_bandwidth(h, grid, cfg.ci_bandwidth_fraction))
                             .with_clamp(cfg.clamp);
            }
        } catch (const Error&) {
            vol.reset();
            ci_vol.reset();
        }
    }

    auto with_ci = [&](ThetaEstimate est) {
        if (ci_vol && est.ok()) {
            try {
                est = confidence_interval(est, *ci_vol, grid, cfg.ci_level);
            } catch (const Error&) {
            }
        }
        return est;
    };

    if (cfg.wants(EstimateMethod::qv2)) {
        res.estimates[EstimateMethod::qv2] = with_ci(qv2);
    }
    if (cfg.wants(EstimateMethod::one_step)) {
        if (vol) {
            const auto clamped = vol->with_clamp(cfg.clamp);
            auto os = detail::guarded(EstimateMethod::one_step, [&] {
                return one_step(panel, qv2, clamped, {cfg.discretize_prelim, cfg.clamp});
            });
            res.estimates[EstimateMethod::one_step] = with_ci(os);
        } else {
            res.estimates[EstimateMethod::one_step] =
                ThetaEstimate::out_of_range(EstimateMethod::one_step, "volatility curves unavailable");
        }
    }

    if (cfg.vol_curves && vol) {
        const std::size_t n = grid.n_obs();
        res.sigma_sq.assign(n + 1, std::nan(""));
        res.sigma_bar_sq.assign(n + 1, std::nan(""));
        const auto* cir = std::get_if<CirLikeVol>(&spec.vol);
        for (std::size_t i = 0; i < vol->size(); ++i) {
            const std::size_t k = vol->first_index + i;
            double s2 = vol->sigma_sq_raw[i];
            double b2 = vol->sigma_bar_sq_raw[i];
            if (cir) {
                // The path is random here, so report the estimation error.
                double level = 0.0;
                for (std::size_t j = 0; j < panel.rows(); ++j) {
                    level += panel.at(j, k);
                }
                level = std::max(level / static_cast<double>(panel.rows()), 0.0);
                s2 -= cir->scale_short * cir->scale_short * level;
                b2 -= cir->scale_long * cir->scale_long * level;
            }
            res.sigma_sq[k] = s2;
            res.sigma_bar_sq[k] = b2;
        }
    }
    return res;
}

// Summaries ----------------------------------------------------------------

struct EstimatorSummary {
    EstimateMethod method = EstimateMethod::qv2;
    std::size_t converged = 0;
    std::size_t total = 0;
    double mean = std::nan("");
    double q025 = std::nan("");
    double q975 = std::nan("");
    double sd = std::nan("");
    /// Converged values in replication order.
    std::vector<double> values;
    /// Replications with an interval, and how many of those cover theta_true.
    std::size_t ci_count = 0;
    std::size_t ci_covered = 0;

    [[nodiscard]] double converged_fraction() const {
        return total == 0 ? 0.0 : static_cast<double>(converged) / static_cast<double>(total);
    }
    [[nodiscard]] std::optional<double> coverage() const {
        if (ci_count == 0) return std::nullopt;
        return static_cast<double>(ci_covered) / static_cast<double>(ci_count);
    }
};

/// Pointwise band over replications; the mean is trimmed, the quantiles are not.
struct CurveBand {
    std::vector<double> t;
    std::vector<double> mean;
    std::vector<double> q025;
    std::vector<double> q975;
    std::vector<std::size_t> count;
};

struct McSummary {
    ExperimentConfig config;
    std::vector<EstimatorSummary> estimators;
    std::optional<CurveBand> sigma_sq;
    std::optional<CurveBand> sigma_bar_sq;
    std::optional<double> mean_bandwidth_days;

    [[nodiscard]] const EstimatorSummary& at(EstimateMethod m) const {
        for (const auto& e : estimators) {
            if (e.method == m) return e;
        }
        throw DomainError("summary has no estimator " + to_string(m));
    }
};

namespace detail {

inline EstimatorSummary summarise(EstimateMethod m, const std::vector<ReplicationResult>& reps,
                                  double theta_true) {
    EstimatorSummary s;
    s.method = m;
    s.total = reps.size();
    for (const auto& r : reps) {
        const auto it = r.estimates.find(m);
        if (it == r.estimates.end() || !it->second.ok()) {
            continue;
        }
        const auto& e = it->second;
        s.values.push_back(*e.value);
        if (e.ci) {
            ++s.ci_count;
            if (e.ci->lo <= theta_true && theta_true <= e.ci->hi) {
                ++s.ci_covered;
            }
        }
    }
    s.converged = s.values.size();
    if (!s.values.empty()) {
        s.mean = stats::mean(s.values);
        s.q025 = stats::quantile(s.values, 0.025);
        s.q975 = stats::quantile(s.values, 0.975);
    }
    if (s.values.size() >= 2) {
        s.sd = std::sqrt(stats::variance(s.values));
    }
    return s;
}

inline std::optional<CurveBand> band(const std::vector<ReplicationResult>& reps, double delta,
                                     double trim, bool bar) {
    std::size_t width = 0;
    for (const auto& r : reps) {
        width = std::max(width, (bar ? r.sigma_bar_sq : r.sigma_sq).size());
    }
    if (width == 0) {
        return std::nullopt;
    }
    CurveBand b;
    std::vector<double> column;
    for (std::size_t k = 0; k < width; ++k) {
        column.clear();
        for (const auto& r : reps) {
            const auto& v = bar ? r.sigma_bar_sq : r.sigma_sq;
            if (k < v.size() && !std::isnan(v[k])) {
                column.push_back(v[k]);
            }
        }
        if (column.empty()) {
            continue;
        }
        b.t.push_back(delta * static_cast<double>(k));
        b.mean.push_back(stats::trimmed_mean(column, trim));
        b.q025.push_back(stats::quantile(column, 0.025));
        b.q975.push_back(stats::quantile(column, 0.975));
        b.count.push_back(column.size());
    }
    return b;
}

} // namespace detail

/// Simulates cfg.replications panels with seeds seed0 + r and aggregates.
inline McSummary run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto grid = cfg.grid();
    const auto spec = cfg.model_spec();
    std::vector<ReplicationResult> reps(cfg.replications);
    parallel_for(cfg.replications, cfg.threads, [&](std::size_t r) {
        reps[r] = run_replication(cfg, spec, grid, cfg.seed0 + r);
    });

    McSummary out;
    out.config = cfg;
    for (auto m : cfg.estimators) {
        out.estimators.push_back(detail::summarise(m, reps, cfg.theta_true));
    }
    if (cfg.vol_curves) {
        out.sigma_sq = detail::band(reps, grid.delta(), cfg.trim, false);
        out.sigma_bar_sq = detail::band(reps, grid.delta(), cfg.trim, true);
    }
    std::vector<double> hs;
    for (const auto& r : reps) {
        if (r.bandwidth) hs.push_back(years_to_days(*r.bandwidth));
    }
    if (!hs.empty()) {
        out.mean_bandwidth_days = stats::mean(hs);
    }
    return out;
}

// Rate study ---------------------------------------------------------------

struct RateRow {
    std::size_t n = 0;
    std::size_t converged = 0;
    std::size_t total = 0;
    double bias = std::nan("");
    double sd = std::nan("");
    double sd_sqrt_n = std::nan("");
    double median_abs_err_n = std::nan("");
};

/// Bias and spread of one estimator as the observation count grows over a
/// fixed horizon; all other settings come from `base`.
inline std::vector<RateRow> rate_study(ExperimentConfig base, const std::vector<std::size_t>& n_values,
                                       EstimateMethod method) {
    for (std::size_t i = 1; i < n_values.size(); ++i) {
        if (n_values[i] <= n_values[i - 1]) {
            throw DomainError("rate_study: n_values must be increasing");
        }
    }
    base.estimators = {method};
    base.vol_curves = false;
    std::vector<RateRow> rows;
    for (std::size_t n : n_values) {
        base.n_obs = n;
        const auto s = run_experiment(base).at(method);
        RateRow row;
        row.n = n;
        row.converged = s.converged;
        row.total = s.total;
        if (!s.values.empty()) {
            row.bias = s.mean - base.theta_true;
            std::vector<double> abs_err;
            for (double v : s.values) abs_err.push_back(std::abs(v - base.theta_true));
            row.median_abs_err_n = stats::median(abs_err) * static_cast<double>(n);
        }
        row.sd = s.sd;
        row.sd_sqrt_n = s.sd * std::sqrt(static_cast<double>(n));
        rows.push_back(row);
    }
    return rows;
}

// Riemann-functional checks --------------------------------------------------

/// Relative error |n sum_i (int_{cell i} Y)^2 - int_0^1 Y^2| / int_0^1 Y^2 on [0, 1]
/// for three paths: a constant, a smooth random trigonometric path, and a
/// (piecewise linear, finely sampled) Brownian path.
struct LemmaRow {
    std::size_t n = 0;
    double constant_error = 0.0;
    double smooth_error = 0.0;
    double brownian_error = 0.0;
};

namespace detail {

/// Piecewise-linear path through (k / m, y_k), k = 0..m.
struct PiecewiseLinear {
    std::vector<double> y;

    [[nodiscard]] double step() const { return 1.0 / static_cast<double>(y.size() - 1); }

    [[nodiscard]] double value(double t) const {
        const double u = t / step();
        const auto k = std::min(static_cast<std::size_t>(u), y.size() - 2);
        const double w = u - static_cast<double>(k);
        return (1.0 - w) * y[k] + w * y[k + 1];
    }

    /// Exact integral over [a, b] (trapezoid is exact piece by piece).
    [[nodiscard]] double integral(double a, double b) const {
        const double h = step();
        double acc = 0.0;
        double lo = a;
        while (lo < b - 1e-15) {
            const auto k = std::min(static_cast<std::size_t>(lo / h + 1e-12), y.size() - 2);
            const double hi = std::min(b, h * static_cast<double>(k + 1));
            acc += 0.5 * (value(lo) + value(hi)) * (hi - lo);
            if (hi <= lo) break;
            lo = hi;
        }
        return acc;
    }

    [[nodiscard]] double integral_sq() const {
        const double h = step();
        double acc = 0.0;
        for (std::size_t k = 0; k + 1 < y.size(); ++k) {
            acc += (y[k] * y[k] + y[k] * y[k + 1] + y[k + 1] * y[k + 1]) / 3.0 * h;
        }
        return acc;
    }
};

template <typename CellIntegral>
double riemann_functional(std::size_t n, CellIntegral&& cell) {
    double acc = 0.0;
    const double dn = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double c = cell(dn * static_cast<double>(i), dn * static_cast<double>(i + 1));
        acc += c * c;
    }
    return acc / dn;
}

} // namespace detail

inline std::vector<LemmaRow> lemma_checks(std::uint64_t seed, const std::vector<std::size_t>& n_values) {
    std::mt19937_64 rng(splitmix64(seed));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    const double level = 0.5 + unif(rng);
    // Y_t = a + b sin(2 pi f t + phi)
    const double a = 0.5 + unif(rng);
    const double b = 0.2 + 0.5 * unif(rng);
    const double f = 1.0 + std::floor(3.0 * unif(rng));
    const double phi = 2.0 * std::numbers::pi * unif(rng);
    const double w = 2.0 * std::numbers::pi * f;
    auto smooth_cell = [&](double lo, double hi) {
        return a * (hi - lo) - b / w * (std::cos(w * hi + phi) - std::cos(w * lo + phi));
    };
    // int_0^1 Y^2 with an integer number of periods
    const double smooth_sq = a * a + 0.5 * b * b -
                             2.0 * a * b / w * (std::cos(w + phi) - std::cos(phi)) -
                             b * b / (4.0 * w) * (std::sin(2.0 * (w + phi)) - std::sin(2.0 * phi));

    detail::PiecewiseLinear bm;
    const std::size_t fine = std::size_t{1} << 16;
    bm.y.resize(fine + 1);
    bm.y[0] = 1.0;
    const double sd = std::sqrt(1.0 / static_cast<double>(fine));
    for (std::size_t k = 1; k <= fine; ++k) {
        bm.y[k] = bm.y[k - 1] + sd * normal(rng);
    }
    const double bm_sq = bm.integral_sq();

    std::vector<LemmaRow> rows;
    for (std::size_t n : n_values) {
        if (n == 0) {
            throw DomainError("lemma_checks: n must be positive");
        }
        LemmaRow row;
        row.n = n;
        const double c = detail::riemann_functional(n, [&](double lo, double hi) { return level * (hi - lo); });
        row.constant_error = std::abs(c - level * level) / (level * level);
        row.smooth_error = std::abs(detail::riemann_functional(n, smooth_cell) - smooth_sq) / smooth_sq;
        row.brownian_error =
            std::abs(detail::riemann_functional(n, [&](double lo, double hi) { return bm.integral(lo, hi); }) -
                     bm_sq) /
            bm_sq;
        rows.push_back(row);
    }
    return rows;
}

// CSV output ---------------------------------------------------------------

/// Header `estimator,converged,total,mean,q025,q975`.
inline void write_summary_csv(std::ostream& os, const McSummary& s) {
    os << "estimator,converged,total,mean,q025,q975\n" << std::setprecision(10);
    for (const auto& e : s.estimators) {
        os << to_string(e.method) << ',' << e.converged << ',' << e.total << ',' << e.mean << ','
           << e.q025 << ',' << e.q975 << '\n';
    }
}

/// Header `t,mean,q025,q975`.
inline void write_band_csv(std::ostream& os, const CurveBand& b) {
    os << "t,mean,q025,q975\n" << std::setprecision(10);
    for (std::size_t k = 0; k < b.t.size(); ++k) {
        os << b.t[k] << ',' << b.mean[k] << ',' << b.q025[k] << ',' << b.q975[k] << '\n';
    }
}

/// Header `n,converged,total,bias,sd,sd_sqrt_n,median_abs_err_n`.
inline void write_rate_csv(std::ostream& os, const std::vector<RateRow>& rows) {
    os << "n,converged,total,bias,sd,sd_sqrt_n,median_abs_err_n\n" << std::setprecision(10);
    for (const auto& r : rows) {
        os << r.n << ',' << r.converged << ',' << r.total << ',' << r.bias << ',' << r.sd << ','
           << r.sd_sqrt_n << ',' << r.median_abs_err_n << '\n';
    }
}

} // namespace hjm2f
