// SPDX-License-Identifier: Apache-2.0

#include "hjm2f/efficient_estimator.hpp"
#include "hjm2f/mc_harness.hpp"
#include "hjm2f/qv_estimators.hpp"
#include "hjm2f/stats.hpp"
#include "test_support.hpp"

#include <catch_amalgamated.hpp>

#include <cmath>
#include <random>

using namespace hjm2f;
using Catch::Approx;

namespace {

const double kT1 = 150.0 / 365.0;
const double kT2 = 181.0 / 365.0;

double cell_s_integral(double theta, double s2, double T1, double a, double b) {
    return s2 * (std::exp(-2 * theta * (T1 - b)) - std::exp(-2 * theta * (T1 - a))) / (2 * theta);
}

} // namespace

TEST_CASE("score vanishes on its two null lines", "[efficient_estimator]") {
    const double d = kT1 / 100;
    const double r = std::exp(-1.4 * (kT2 - kT1));
    CHECK(efficient_score_value(0.01, 0.01, 1.4, kT1, kT2, d, 0.02) == 0.0);
    CHECK(efficient_score_value(0.01, r * 0.01, 1.4, kT1, kT2, d, 0.02) == Approx(0.0).margin(1e-15));
    CHECK(efficient_score_value(0.01, 0.02, 1.4, kT1, kT2, d, 0.02) != 0.0);
    CHECK_THROWS_AS(efficient_score_value(0.01, 0.02, 1e-12, kT1, kT2, d, 0.02), DomainError);
}

TEST_CASE("per-increment information reference value", "[efficient_estimator]") {
    const double d = kT1 / 100;
    const double S = cell_s_integral(1.4, 0.37 * 0.37, kT1, 0.0, d);
    CHECK(score_information(1.4, kT1, kT2, S, 0.0225 * d) ==
          Approx(0.8761506805186939689592406).epsilon(1e-12));
}

TEST_CASE("score has mean zero and variance equal to the information", "[efficient_estimator]") {
    const double theta = 1.4, s2 = 0.37 * 0.37, b2 = 0.0225;
    const double d = kT1 / 100;
    const double a = 40 * d, b = 41 * d;
    const auto c = increment_covariance(theta, VolCurves::constant(0.37, 0.15), a, b, kT1, kT2);
    const double l11 = std::sqrt(c.var1), l21 = c.cov / l11, l22 = std::sqrt(c.var2 - l21 * l21);
    std::mt19937_64 rng(77);
    std::normal_distribution<double> z;
    const std::size_t N = 400000;
    double sum = 0.0, sum_sq = 0.0, sum_4 = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double z1 = z(rng), z2 = z(rng);
        const double l = efficient_score_value(l11 * z1, l21 * z1 + l22 * z2, theta, kT1, kT2, d, b2);
        sum += l;
        sum_sq += l * l;
        sum_4 += l * l * l * l;
    }
    const double info = score_information(theta, kT1, kT2, cell_s_integral(theta, s2, kT1, a, b), b2 * d);
    const double mean = sum / N, m2 = sum_sq / N;
    CHECK(std::abs(mean) < 4.0 * std::sqrt(m2 / N));
    const double se2 = std::sqrt((sum_4 / N - m2 * m2) / N);
    CHECK(std::abs(m2 - info) < 4.0 * se2);
}

TEST_CASE("rate discretisation", "[efficient_estimator]") {
    const double d = 0.0004; // sqrt = 0.02
    CHECK(discretize_rate(1.405, d) == Approx(1.40).epsilon(1e-12));
    CHECK(discretize_rate(0.019, d) == 0.0);
}

TEST_CASE("one step passes through unusable preliminary estimates", "[efficient_estimator]") {
    const auto g = reference_grid(ConfigId::d2);
    const auto p = test::noiseless_panel(g, 1.4, 0.1, 0.02);
    const auto vol = estimate_vol_curves(p, 1.4, days_to_years(14));
    const auto pre = ThetaEstimate::out_of_range(EstimateMethod::qv2, "x");
    const auto out = one_step(p, pre, vol);
    CHECK(out.status == EstimateStatus::OutOfRange);
    CHECK(out.method == EstimateMethod::one_step);
}

TEST_CASE("one step leaves the estimate unchanged when every score vanishes", "[efficient_estimator]") {
    // identical rows: dX2 - dX1 = 0 at every increment
    const auto g = reference_grid(ConfigId::d2);
    std::vector<double> dx(g.n_obs());
    for (std::size_t i = 0; i < dx.size(); ++i) dx[i] = 0.01 * ((i % 3) + 1.0);
    const auto p = test::panel_from_increments(g, {dx, dx});
    const auto vol = estimate_vol_curves(p, 2.0, days_to_years(14));
    OneStepOptions opt;
    opt.discretize_prelim = false;
    const auto out = one_step(p, ThetaEstimate::converged(2.0, EstimateMethod::qv2), vol, opt);
    REQUIRE(out.ok());
    CHECK(*out.value == 2.0);
    CHECK_FALSE(out.note.empty());
}

TEST_CASE("one step rejects non-positive plug-ins unless clamped", "[efficient_estimator]") {
    const auto g = reference_grid(ConfigId::d2);
    const auto p = test::noiseless_panel(g, 1.4, 0.1, 0.02);
    auto vol = estimate_vol_curves(p, 1.4, days_to_years(14));
    vol.sigma_bar_sq[3] = -1e-3;
    const auto pre = ThetaEstimate::converged(1.4, EstimateMethod::qv2);
    CHECK_THROWS_AS(one_step(p, pre, vol), DomainError);
    vol.sigma_bar_sq_raw[3] = -1e-3;
    OneStepOptions opt;
    opt.clamp = ClampBox{1e-4, 1e2};
    CHECK_NOTHROW(one_step(p, pre, vol.with_clamp(opt.clamp), opt));
}

TEST_CASE("one step on simulated data", "[efficient_estimator]") {
    const auto cfg = paper_config(ConfigId::d2, 10.0);
    int ok = 0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto p = simulate_panel(cfg.spec, cfg.grid, seed);
        const auto pre = theta_hat_2(p);
        if (!pre.ok()) continue;
        const auto vol = estimate_vol_curves(p, *pre.value, days_to_years(14), kDefaultFloorTheta,
                                             ClampBox{1e-4, 1e2});
        OneStepOptions opt;
        opt.clamp = ClampBox{1e-4, 1e2};
        const auto out = one_step(p, pre, vol, opt);
        CHECK(out.method == EstimateMethod::one_step);
        if (out.ok()) {
            CHECK(*out.value > 0.0);
            ++ok;
        }
    }
    CHECK(ok > 15);
}

TEST_CASE("plug-in variance and interval widths", "[efficient_estimator]") {
    const auto g = reference_grid(ConfigId::d2);
    const double h = days_to_years(14);
    const auto cfg = paper_config(ConfigId::d2, 1.4);
    const auto p = simulate_panel(cfg.spec, cfg.grid, 8);
    const auto vol = estimate_vol_curves(p, 1.4, h, kDefaultFloorTheta, ClampBox{1e-4, 1e2});
    auto a = ThetaEstimate::converged(1.5, EstimateMethod::qv2);
    auto b = ThetaEstimate::converged(1.5, EstimateMethod::one_step);
    const double scale = g.horizon() / (g.horizon() - vol.times.front());
    CHECK(plugin_asymptotic_variance(a, vol, g) ==
          Approx(v_theta(1.5, kT1, kT2, vol.samples()) / scale).epsilon(1e-14));
    CHECK(plugin_asymptotic_variance(b, vol, g) ==
          Approx(v_opt(1.5, kT1, kT2, vol.samples()) / scale).epsilon(1e-14));
    const auto ca = confidence_interval(a, vol, g);
    const auto cb = confidence_interval(b, vol, g);
    REQUIRE(ca.ci);
    REQUIRE(cb.ci);
    CHECK(cb.ci->hi - cb.ci->lo <= (ca.ci->hi - ca.ci->lo) * (1 + 1e-12));
    const double half = numerics::normal_quantile(0.975) * std::sqrt(*ca.plugin_variance);
    CHECK(ca.ci->lo == Approx(1.5 - half).epsilon(1e-14));
    CHECK(ca.ci->hi == Approx(1.5 + half).epsilon(1e-14));
    CHECK(*ca.plugin_variance == Approx(g.delta() * plugin_asymptotic_variance(a, vol, g)));
    const auto c99 = confidence_interval(a, vol, g, 0.99);
    CHECK(c99.ci->hi - c99.ci->lo > ca.ci->hi - ca.ci->lo);
    CHECK_THROWS_AS(confidence_interval(ThetaEstimate::converged(1.5, EstimateMethod::qv3), vol, g),
                    DomainError);
}

TEST_CASE("interval widths coincide for constant curves", "[efficient_estimator]") {
    const auto g = reference_grid(ConfigId::d2);
    const auto p = test::noiseless_panel(g, 1.4, 0.37 * 0.37, 0.0225);
    const auto vol = estimate_vol_curves(p, 1.4, days_to_years(14));
    const auto ca = confidence_interval(ThetaEstimate::converged(1.4, EstimateMethod::qv2), vol, g);
    const auto cb = confidence_interval(ThetaEstimate::converged(1.4, EstimateMethod::one_step), vol, g);
    CHECK(cb.ci->hi - cb.ci->lo == Approx(ca.ci->hi - ca.ci->lo).epsilon(1e-9));
}

TEST_CASE("interval plug-in bandwidth", "[efficient_estimator]") {
    const auto g = reference_grid(ConfigId::d2);
    const double h = days_to_years(14);
    CHECK(ci_bandwidth(h, g) == Approx(0.4 * g.horizon()));
    CHECK(ci_bandwidth(h, g, 0.0) == h);
    CHECK(ci_bandwidth(0.5 * g.horizon(), g) == 0.5 * g.horizon());
    CHECK(ci_bandwidth(h, g, 0.9999) == Approx(g.horizon() - g.delta()));
    CHECK_THROWS_AS(ci_bandwidth(h, g, 1.0), DomainError);
}

TEST_CASE("95% intervals cover the true rate", "[efficient_estimator]") {
    ExperimentConfig cfg;
    cfg.ci = true;
    cfg.estimators = {EstimateMethod::qv2, EstimateMethod::one_step};
    const auto s = run_experiment(cfg);
    for (auto m : cfg.estimators) {
        const auto& e = s.at(m);
        INFO(to_string(m) << " coverage " << *e.coverage() << " of " << e.ci_count);
        CHECK(e.ci_count >= 1990);
        CHECK(*e.coverage() >= 0.93);
        CHECK(*e.coverage() <= 0.97);
    }
}

namespace {

/// delta^{-1/2} (theta_tilde - theta) over 2000 constant-vol replications.
std::vector<double> normalised_one_step_errors(std::optional<std::size_t> n_obs, double& v_opt_out) {
    ExperimentConfig cfg;
    cfg.vol_mode = VolMode::constant;
    cfg.drift = DriftMode::zero;
    cfg.estimators = {EstimateMethod::one_step};
    cfg.n_obs = n_obs;
    if (n_obs) cfg.substeps = 1;
    const auto s = run_experiment(cfg).at(EstimateMethod::one_step);
    const auto g = cfg.grid();
    v_opt_out = v_opt(cfg.theta_true, VolCurves::constant(cfg.sigma, cfg.sigma_bar), g);
    std::vector<double> z;
    for (double v : s.values) z.push_back((v - cfg.theta_true) / std::sqrt(g.delta()));
    return z;
}

} // namespace

TEST_CASE("one-step errors: variance near the bound, normal for large n", "[efficient_estimator]") {
    double vo = 0.0;
    const auto z100 = normalised_one_step_errors(std::nullopt, vo);
    REQUIRE(z100.size() >= 1990);
    CHECK(stats::variance(z100) == Approx(vo).epsilon(0.2));
    // Ratio estimators are right-skewed at n = 100; reported, not asserted.
    WARN("Jarque-Bera at n = 100: " << stats::jarque_bera(z100));

    const auto z1600 = normalised_one_step_errors(1600, vo);
    REQUIRE(z1600.size() >= 1990);
    CHECK(stats::variance(z1600) == Approx(vo).epsilon(0.2));
    CHECK(stats::jarque_bera(z1600) < 9.21); // chi^2_2 at the 1% level
}

TEST_CASE("a second Newton step usually moves less than the first", "[efficient_estimator]") {
    const auto cfg = paper_config(ConfigId::d2, 1.4);
    const OneStepOptions opt{false, ClampBox{1e-4, 1e2}};
    int shrink = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 500; ++seed) {
        const auto p = simulate_panel(cfg.spec, cfg.grid, seed);
        const auto pre = theta_hat_2(p);
        if (!pre.ok()) continue;
        const auto vol = estimate_vol_curves(p, *pre.value, days_to_years(14));
        const auto a = one_step(p, pre, vol, opt);
        if (!a.ok()) continue;
        const auto b = one_step(p, a, vol, opt);
        if (!b.ok()) continue;
        ++total;
        shrink += std::abs(*b.value - *a.value) < std::abs(*a.value - *pre.value);
    }
    REQUIRE(total > 400);
    WARN("second step smaller in " << shrink << " of " << total << " replications");
    CHECK(shrink > total / 2);
}
