#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sim.hpp"
#include "test_util.hpp"

using namespace shiftlab;
using namespace shiftlab::sim;

namespace {

ScenarioConfig tiny_mixed_config() {
  ScenarioConfig config;
  config.scenario_id = "tiny";
  config.k = 2;
  config.n_grid = {6, 8, 10};
  config.reps = 2;
  config.noise_variance = 0.04;
  config.spectrum_rule = SpectrumRule::Explicit;
  config.explicit_eigenvalues = {1.0, 0.8, 0.2, 0.1, 0.05};
  config.target_rule = TargetRule::ScaledRandom;
  config.target_norm_T = 2.0;
  config.target_ratio = 1.5;
  config.tail_block_size = 2;
  config.estimators = {
      EstimatorSpec{"minnorm", EstimatorKind::Minnorm, LambdaRule::Const, 0.0},
      EstimatorSpec{"ridge", EstimatorKind::Ridge, LambdaRule::Const, 0.5},
      EstimatorSpec{"pcr", EstimatorKind::Pcr, LambdaRule::Const, 0.0},
  };
  return config;
}

std::string records_to_string(const std::vector<RiskRecord>& records) {
  const std::string path =
      (std::filesystem::temp_directory_path() / "shiftlab_test_records.csv").string();
  write_records(records, path);
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::filesystem::remove(path);
  return buffer.str();
}

std::vector<RiskRecord> synthetic_records(const std::vector<std::size_t>& ns,
                                          const std::vector<double>& risks) {
  std::vector<RiskRecord> records;
  for (std::size_t i = 0; i < ns.size(); ++i) {
    RiskRecord r;
    r.scenario_id = "synthetic";
    r.estimator = "minnorm";
    r.n = ns[i];
    r.rep = 0;
    r.excess_risk = risks[i];
    records.push_back(r);
  }
  return records;
}

}  // namespace

TEST_CASE("scenario_benign matches its protocol") {
  const ScenarioConfig config = scenario_benign(5.0, 1.0);
  CHECK(config.k == 10);
  CHECK(config.noise_variance == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(config.reps == 10);
  CHECK(config.n_grid == std::vector<std::size_t>{25, 50, 100, 141, 200});
  REQUIRE(config.estimators.size() == 1);
  CHECK(config.estimators[0].kind == EstimatorKind::Minnorm);

  const model::Spectrum spec = build_spectrum(config, 100);
  CHECK(spec.dim() == 10 + 100 * 100);
  CHECK(spec.lambda(9) == 1.0);
  CHECK(spec.lambda(10) == doctest::Approx(1e-3).epsilon(1e-14));
  CHECK(spec.lambda(spec.dim() - 1) == doctest::Approx(1e-3).epsilon(1e-14));

  const std::vector<double> beta = build_beta(config, spec.dim());
  for (std::size_t j = 0; j < 10; ++j)
    CHECK(beta[j] == doctest::Approx(1.0 / std::sqrt(10.0)).epsilon(1e-15));
  for (std::size_t j = 10; j < 30; ++j) CHECK(beta[j] == 0.0);
}

TEST_CASE("scenario_large_shift matches its protocol") {
  const ScenarioConfig config = scenario_large_shift();
  CHECK(config.n_grid == std::vector<std::size_t>{100, 200, 400, 800, 1600});
  CHECK(config.reps == 10);
  const model::Spectrum spec = build_spectrum(config, 100);
  CHECK(spec.dim() == 20);  // 10 ones + floor(sqrt(100)) tail entries
  CHECK(spec.lambda(10) == doctest::Approx(0.1).epsilon(1e-14));

  REQUIRE(config.estimators.size() == 5);
  CHECK(config.estimators[0].lambda_at(100) == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK(config.estimators[1].lambda_at(100) == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(config.estimators[2].lambda_at(100) == doctest::Approx(std::pow(100.0, 0.75)).epsilon(1e-12));
  CHECK(config.estimators[3].lambda_at(100) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(config.estimators[4].kind == EstimatorKind::Pcr);

  const model::TargetCovariance target = build_target(config, spec, 100, 7);
  std::vector<double> probe(spec.dim());
  for (std::size_t j = 0; j < probe.size(); ++j) probe[j] = static_cast<double>(j) - 3.0;
  CHECK(model::target_apply(target, probe) == probe);
}

TEST_CASE("run_sweep produces one record per cell, deterministically") {
  const ScenarioConfig config = tiny_mixed_config();
  const auto records = run_sweep(config, 12345, 1);
  CHECK(records.size() == config.n_grid.size() * config.reps * config.estimators.size());

  const auto rerun = run_sweep(config, 12345, 1);
  CHECK(records_to_string(records) == records_to_string(rerun));

  // Thread count must not change the bytes.
  const auto threaded = run_sweep(config, 12345, 4);
  CHECK(records_to_string(records) == records_to_string(threaded));

  // Records arrive ordered by (n, rep, estimator).
  for (std::size_t i = 1; i < records.size(); ++i) {
    const auto& a = records[i - 1];
    const auto& b = records[i];
    const bool ordered = a.n < b.n || (a.n == b.n && (a.rep < b.rep ||
                         (a.rep == b.rep && a.estimator <= b.estimator)));
    CHECK(ordered);
  }

  // PCR cells consume 2n samples, the rest train on n.
  for (const auto& r : records) {
    if (r.estimator == "pcr")
      CHECK(r.samples_used == 2 * r.n);
    else
      CHECK(r.samples_used == r.n);
    CHECK_FALSE(r.failed);
    CHECK(r.excess_risk >= 0.0);
  }
}

TEST_CASE("run_sweep records estimator failures instead of aborting") {
  // PCR needs k <= min(n, d); n = 2 < k = 3 makes those cells fail.
  ScenarioConfig config;
  config.scenario_id = "failing";
  config.k = 3;
  config.n_grid = {2, 6, 10};
  config.reps = 2;
  config.noise_variance = 0.01;
  config.spectrum_rule = SpectrumRule::Explicit;
  config.explicit_eigenvalues = {1.0, 0.9, 0.8, 0.2, 0.1};
  config.target_rule = TargetRule::Identity;
  config.estimators = {
      EstimatorSpec{"minnorm", EstimatorKind::Minnorm, LambdaRule::Const, 0.0},
      EstimatorSpec{"pcr", EstimatorKind::Pcr, LambdaRule::Const, 0.0},
  };
  const auto records = run_sweep(config, 77, 1);
  CHECK(records.size() == 3 * 2 * 2);
  for (const auto& r : records) {
    if (r.estimator == "pcr" && r.n == 2) {
      CHECK(r.failed);
      CHECK(std::isnan(r.excess_risk));
    } else {
      CHECK_FALSE(r.failed);
      CHECK(std::isfinite(r.excess_risk));
    }
  }
}

TEST_CASE("run_sweep self-consistency of realized risk and closed form") {
  // Across reps, the realized risk should track bias + variance.
  ScenarioConfig config = tiny_mixed_config();
  config.n_grid = {12, 16, 20};
  config.reps = 40;
  const auto records = run_sweep(config, 99, 0);
  for (std::size_t n : config.n_grid) {
    std::vector<double> realized, closed;
    for (const auto& r : records) {
      if (r.n != n || r.estimator != "ridge" || r.failed) continue;
      realized.push_back(r.excess_risk);
      closed.push_back(r.bias + r.variance);
    }
    const auto real_stats = testutil::mean_stderr(realized);
    const auto closed_stats = testutil::mean_stderr(closed);
    const double se = std::sqrt(real_stats.stderr_ * real_stats.stderr_ +
                                closed_stats.stderr_ * closed_stats.stderr_);
    CHECK(std::abs(real_stats.mean - closed_stats.mean) <= 4.0 * se);
  }
}

TEST_CASE("reduced benign run shows a decaying risk curve") {
  ScenarioConfig config = scenario_benign(1.0, 1.0);
  config.n_grid = {25, 50, 100};
  config.reps = 3;
  const auto records = run_sweep(config, 7, 0);
  const SlopeFit fit = slope_fit(records, "minnorm");
  CHECK(fit.slope < -0.5);
}

TEST_CASE("slope_fit exact power laws") {
  const std::vector<std::size_t> ns{10, 20, 40, 80};
  std::vector<double> inv, flat, half;
  for (std::size_t n : ns) {
    inv.push_back(3.0 / static_cast<double>(n));
    flat.push_back(2.5);
    half.push_back(std::pow(static_cast<double>(n), -0.5));
  }
  CHECK(slope_fit(synthetic_records(ns, inv), "minnorm").slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(slope_fit(synthetic_records(ns, flat), "minnorm").slope) <= 1e-12);
  CHECK(slope_fit(synthetic_records(ns, half), "minnorm").slope == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("slope_fit scale invariance and error paths") {
  const std::vector<std::size_t> ns{10, 20, 40};
  const std::vector<double> risks{1.0, 0.5, 0.25};
  const SlopeFit base = slope_fit(synthetic_records(ns, risks), "minnorm");
  std::vector<double> scaled = risks;
  for (double& v : scaled) v *= 37.0;
  const SlopeFit shifted = slope_fit(synthetic_records(ns, scaled), "minnorm");
  CHECK(shifted.slope == doctest::Approx(base.slope).epsilon(1e-12));
  CHECK(shifted.intercept == doctest::Approx(base.intercept + std::log10(37.0)).epsilon(1e-12));

  CHECK_THROWS_AS(slope_fit(synthetic_records({10, 20}, {1.0, 0.5}), "minnorm"), InputError);
  CHECK_THROWS_AS(slope_fit(synthetic_records(ns, {1.0, 0.0, 0.25}), "minnorm"), DomainError);
  CHECK_THROWS_AS(slope_fit(synthetic_records(ns, risks), "missing"), InputError);
}

TEST_CASE("write_records emits a header-only file for no records") {
  const std::string csv = records_to_string({});
  CHECK(csv ==
        "scenario_id,estimator,n,rep,lambda,excess_risk,bias,variance,samples_used,seed_hex,failed\n");
}

TEST_CASE("records survive a CSV round trip") {
  const ScenarioConfig config = tiny_mixed_config();
  const auto records = run_sweep(config, 5, 1);
  const std::string path =
      (std::filesystem::temp_directory_path() / "shiftlab_roundtrip.csv").string();
  write_records(records, path);
  const auto parsed = read_records(path);
  std::filesystem::remove(path);
  REQUIRE(parsed.size() == records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    CHECK(parsed[i].scenario_id == records[i].scenario_id);
    CHECK(parsed[i].estimator == records[i].estimator);
    CHECK(parsed[i].n == records[i].n);
    CHECK(parsed[i].rep == records[i].rep);
    CHECK(parsed[i].lambda == records[i].lambda);  // 17 significant digits round-trip
    CHECK(parsed[i].excess_risk == records[i].excess_risk);
    CHECK(parsed[i].bias == records[i].bias);
    CHECK(parsed[i].variance == records[i].variance);
    CHECK(parsed[i].seed == records[i].seed);
    CHECK(parsed[i].failed == records[i].failed);
  }
}

TEST_CASE("config JSON round trip preserves structure") {
  for (const ScenarioConfig& config :
       {scenario_benign(25.0, 1.0), scenario_large_shift(), tiny_mixed_config()}) {
    const ScenarioConfig reparsed = parse_config_json(config_to_json(config));
    CHECK(reparsed == config);
  }
}

TEST_CASE("config validation names the offending field") {
  ScenarioConfig config = tiny_mixed_config();
  config.reps = 0;
  try {
    config.validate();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("reps") != std::string::npos);
  }

  const char* negative_reps = R"({
    "scenario": "x", "k": 2, "n_grid": [4, 6, 8], "reps": -1, "noise_variance": 0.1,
    "spectrum": {"rule": "benign_tail"}, "target": {"rule": "identity"},
    "estimators": [{"name": "minnorm"}]
  })";
  try {
    parse_config_json(negative_reps);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("reps") != std::string::npos);
  }
}

TEST_CASE("config parser rejects unknown keys and bad estimators") {
  const char* unknown_key = R"({
    "scenario": "x", "k": 2, "n_grid": [4, 6, 8], "reps": 1, "noise_variance": 0.1,
    "spectrum": {"rule": "benign_tail"}, "target": {"rule": "identity"},
    "estimators": [{"name": "minnorm"}], "bogus": 1
  })";
  CHECK_THROWS_AS(parse_config_json(unknown_key), ConfigError);

  const char* bad_estimator = R"({
    "scenario": "x", "k": 2, "n_grid": [4, 6, 8], "reps": 1, "noise_variance": 0.1,
    "spectrum": {"rule": "benign_tail"}, "target": {"rule": "identity"},
    "estimators": [{"name": "lasso"}]
  })";
  CHECK_THROWS_AS(parse_config_json(bad_estimator), ConfigError);

  const char* ridge_without_rule = R"({
    "scenario": "x", "k": 2, "n_grid": [4, 6, 8], "reps": 1, "noise_variance": 0.1,
    "spectrum": {"rule": "benign_tail"}, "target": {"rule": "identity"},
    "estimators": [{"name": "ridge"}]
  })";
  CHECK_THROWS_AS(parse_config_json(ridge_without_rule), ConfigError);
}

TEST_CASE("explicit spectrum and target rules build consistently") {
  ScenarioConfig config;
  config.scenario_id = "explicit";
  config.k = 1;
  config.n_grid = {4, 5, 6};
  config.reps = 1;
  config.noise_variance = 0.01;
  config.spectrum_rule = SpectrumRule::Explicit;
  config.explicit_eigenvalues = {2.0, 0.5, 0.25};
  config.target_rule = TargetRule::Explicit;
  config.explicit_target_top = {{3.0}};
  config.explicit_target_tail = {0.4, 0.1};
  config.tail_block_size = 2;
  config.estimators = {EstimatorSpec{"ridge", EstimatorKind::Ridge, LambdaRule::Const, 0.1}};
  config.validate();

  const model::Spectrum spec = build_spectrum(config, 5);
  const model::TargetCovariance target = build_target(config, spec, 5, 1);
  CHECK(target.top()(0, 0) == 3.0);
  CHECK(target.trace() == doctest::Approx(3.5).epsilon(1e-15));
  const auto diag = model::shift_diagnostics(spec, target, 5, 0.0);
  CHECK(diag.norm_T == doctest::Approx(1.5).epsilon(1e-12));  // 3.0 / 2.0
}

TEST_CASE("exact_risk=false falls back to the test-set estimator") {
  ScenarioConfig config = tiny_mixed_config();
  config.exact_risk = false;
  config.n_grid = {20, 24, 28};
  config.reps = 6;
  const auto mc_records = run_sweep(config, 3, 0);
  config.exact_risk = true;
  const auto exact_records = run_sweep(config, 3, 0);
  REQUIRE(mc_records.size() == exact_records.size());
  // Same designs, so the test-set estimate should track the exact risk.
  double mc_mean = 0.0, exact_mean = 0.0;
  for (std::size_t i = 0; i < mc_records.size(); ++i) {
    mc_mean += mc_records[i].excess_risk;
    exact_mean += exact_records[i].excess_risk;
  }
  mc_mean /= static_cast<double>(mc_records.size());
  exact_mean /= static_cast<double>(exact_records.size());
  CHECK(mc_mean == doctest::Approx(exact_mean).epsilon(0.25));
}
