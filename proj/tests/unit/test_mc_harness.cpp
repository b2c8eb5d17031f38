// SPDX-License-Identifier: Apache-2.0

#include "hjm2f/mc_harness.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>

using namespace hjm2f;
using Catch::Approx;

namespace {

ExperimentConfig parse_text(const std::string& s) {
    std::istringstream is(s);
    return ExperimentConfig::parse(is);
}

} // namespace

TEST_CASE("experiment config parsing", "[mc_harness]") {
    const auto cfg = parse_text(R"(# comment
config_id = d3
theta_true = 10   # trailing comment
vol_mode = custom
sigma_bar_sq_slope = 1
drift = zero
replications = 25
seed0 = 7
estimators = qv2, qv3, qvd, one-step
bandwidth = delta_power:0.333
cv_candidates_days = 7,14
n_obs = 40
clamp = none
ci = true
vol_curves = yes
)");
    CHECK(cfg.config_id == ConfigId::d3);
    CHECK(cfg.theta_true == 10.0);
    CHECK(cfg.vol_mode == VolMode::custom);
    CHECK(cfg.sigma_bar_sq_slope == 1.0);
    CHECK(cfg.drift == DriftMode::zero);
    CHECK(cfg.replications == 25);
    CHECK(cfg.seed0 == 7);
    CHECK(cfg.estimators.size() == 4);
    CHECK(cfg.wants(EstimateMethod::one_step));
    CHECK(cfg.bandwidth.kind == BandwidthRule::Kind::delta_power);
    CHECK(cfg.bandwidth.value == Approx(0.333));
    CHECK(cfg.cv_candidates_days == std::vector<double>{7, 14});
    CHECK(cfg.grid().n_obs() == 40);
    CHECK_FALSE(cfg.clamp.has_value());
    CHECK(cfg.ci);
    CHECK(cfg.vol_curves);
    CHECK(parse_bandwidth_rule("cv").kind == BandwidthRule::Kind::cv);
    CHECK(parse_bandwidth_rule("21").value == 21.0);
}

TEST_CASE("experiment config errors carry line numbers", "[mc_harness]") {
    try {
        parse_text("theta_true = 1\nbogus = 3\n");
        FAIL("expected a ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse_text("theta_true 1\n"), ParseError);
    CHECK_THROWS_AS(parse_text("replications = many\n"), ParseError);
    CHECK_THROWS_AS(parse_text("estimators = mle\n"), ParseError);
    CHECK_THROWS_AS(parse_text("config_id = d9\n"), ParseError);
    CHECK_THROWS_AS(parse_text("replications = 0\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("estimators = qv3\n"), ValidationError);
    CHECK_THROWS_AS(parse_text("clamp = 2,1\n"), ValidationError);
}

TEST_CASE("a single replication", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 1;
    cfg.theta_true = 10.0;
    cfg.estimators = {EstimateMethod::qv2, EstimateMethod::one_step};
    cfg.vol_curves = true;
    const auto s = run_experiment(cfg);
    REQUIRE(s.estimators.size() == 2);
    CHECK(s.at(EstimateMethod::qv2).total == 1);
    CHECK(s.at(EstimateMethod::qv2).converged <= 1);
    REQUIRE(s.sigma_bar_sq);
    CHECK(s.sigma_bar_sq->t.size() == s.sigma_bar_sq->mean.size());
    REQUIRE(s.mean_bandwidth_days);
    CHECK(*s.mean_bandwidth_days == Approx(14.0));
}

TEST_CASE("experiments are reproducible across thread counts", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 24;
    cfg.estimators = {EstimateMethod::qv2, EstimateMethod::one_step};
    cfg.threads = 1;
    const auto a = run_experiment(cfg);
    cfg.threads = 3;
    const auto b = run_experiment(cfg);
    for (auto m : cfg.estimators) {
        REQUIRE(a.at(m).values == b.at(m).values);
    }
    cfg.seed0 = 2;
    const auto c = run_experiment(cfg);
    CHECK(c.at(EstimateMethod::qv2).values != a.at(EstimateMethod::qv2).values);
}

TEST_CASE("model specs follow the vol and drift modes", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.vol_mode = VolMode::custom;
    cfg.sigma_sq_slope = 0.5;
    cfg.sigma_bar_sq_slope = 1.0;
    const auto spec = cfg.model_spec();
    const auto* det = std::get_if<DeterministicVol>(&spec.vol);
    REQUIRE(det);
    const double T = cfg.grid().horizon();
    CHECK(det->curves.sigma_sq(T) == Approx(1.5 * 0.37 * 0.37));
    CHECK(det->curves.sigma_bar_sq(T) == Approx(2 * 0.0225));
    cfg.vol_mode = VolMode::constant;
    CHECK(std::holds_alternative<ConstantVol>(cfg.model_spec().vol));
    CHECK(std::holds_alternative<MeanRevertDrift>(cfg.model_spec().drift));
    cfg.drift = DriftMode::zero;
    CHECK(std::holds_alternative<ZeroDrift>(cfg.model_spec().drift));
}

TEST_CASE("interval coverage is tallied", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 40;
    cfg.vol_mode = VolMode::constant;
    cfg.theta_true = 10.0;
    cfg.ci = true;
    const auto s = run_experiment(cfg).at(EstimateMethod::qv2);
    CHECK(s.ci_count > 30);
    REQUIRE(s.coverage());
    CHECK(*s.coverage() > 0.7);
}

TEST_CASE("Riemann functional checks", "[mc_harness]") {
    const auto rows = lemma_checks(3, {16, 32, 64, 128, 256});
    REQUIRE(rows.size() == 5);
    for (const auto& r : rows) {
        CHECK(r.constant_error < 1e-13);
    }
    for (std::size_t i = 1; i < rows.size(); ++i) {
        // smooth paths converge at rate n^{-2}
        const double ratio = rows[i].smooth_error / rows[i - 1].smooth_error;
        CHECK(ratio > 0.2);
        CHECK(ratio < 0.3);
    }
    CHECK(rows.back().brownian_error < rows.front().brownian_error);
    CHECK(rows.back().brownian_error < 0.05);
    CHECK_THROWS_AS(lemma_checks(1, {0}), DomainError);
}

TEST_CASE("rate study rows", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 20;
    cfg.vol_mode = VolMode::constant;
    cfg.theta_true = 10.0;
    const auto rows = rate_study(cfg, {50}, EstimateMethod::qv2);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].n == 50);
    CHECK(rows[0].total == 20);
    CHECK(rows[0].sd_sqrt_n == Approx(rows[0].sd * std::sqrt(50.0)));
    CHECK_THROWS_AS(rate_study(cfg, {50, 40}, EstimateMethod::qv2), DomainError);
}

TEST_CASE("two-maturity estimator settles at the square-root rate", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.vol_mode = VolMode::constant;
    cfg.drift = DriftMode::zero;
    cfg.substeps = 1;
    cfg.replications = 1000;
    const auto rows = rate_study(cfg, {50, 100, 200, 400}, EstimateMethod::qv2);
    REQUIRE(rows.size() == 4);
    double lo = rows[1].sd_sqrt_n, hi = rows[1].sd_sqrt_n;
    for (std::size_t i = 1; i < rows.size(); ++i) {
        lo = std::min(lo, rows[i].sd_sqrt_n);
        hi = std::max(hi, rows[i].sd_sqrt_n);
        CHECK(rows[i].sd <= 1.1 * rows[i - 1].sd);
    }
    CHECK(hi / lo < 1.25);
    const auto& last = rows.back();
    CHECK(std::abs(last.bias) < 3.0 * last.sd / std::sqrt(static_cast<double>(last.converged)));
}

TEST_CASE("three-maturity estimator without drift", "[mc_harness]") {
    // Without drift the differenced increments share one Brownian factor, so
    // the error vanishes faster than 1 / n.
    ExperimentConfig cfg;
    cfg.config_id = ConfigId::d3;
    cfg.theta_true = 10.0;
    cfg.drift = DriftMode::zero;
    cfg.replications = 300;
    const auto rows = rate_study(cfg, {50, 100, 200}, EstimateMethod::qv3);
    REQUIRE(rows.size() == 3);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].median_abs_err_n <= rows[i - 1].median_abs_err_n + 1e-9);
    }
}

TEST_CASE("summary means sit inside their quantile intervals", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 200;
    cfg.estimators = {EstimateMethod::qv2, EstimateMethod::one_step};
    const auto s = run_experiment(cfg);
    for (auto m : cfg.estimators) {
        const auto& e = s.at(m);
        REQUIRE(e.converged >= 100);
        CHECK(e.q025 <= e.mean);
        CHECK(e.mean <= e.q975);
    }
}

TEST_CASE("summary CSV", "[mc_harness]") {
    ExperimentConfig cfg;
    cfg.replications = 5;
    cfg.vol_curves = true;
    const auto s = run_experiment(cfg);
    std::stringstream ss;
    write_summary_csv(ss, s);
    std::string line;
    std::getline(ss, line);
    CHECK(line == "estimator,converged,total,mean,q025,q975");
    std::getline(ss, line);
    CHECK(line.rfind("qv2,", 0) == 0);
    std::stringstream bs;
    write_band_csv(bs, *s.sigma_bar_sq);
    std::getline(bs, line);
    CHECK(line == "t,mean,q025,q975");
}
