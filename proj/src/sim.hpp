#ifndef SHIFTLAB_SIM_HPP
#define SHIFTLAB_SIM_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "estimators.hpp"
#include "model.hpp"

namespace shiftlab::sim {

using model::Spectrum;
using model::TargetCovariance;

enum class SpectrumRule { BenignTail, LargeShiftTail, LowerBound, Explicit };
enum class TargetRule { ScaledRandom, Identity, Explicit };
enum class EstimatorKind { Minnorm, Ridge, Pcr };
enum class LambdaRule { Const, Power, SqrtN };

struct EstimatorSpec {
  std::string name;
  EstimatorKind kind = EstimatorKind::Minnorm;
  LambdaRule lambda_rule = LambdaRule::Const;
  double lambda_value = 0.0;  // const: lambda itself; power: the exponent a in n^a

  double lambda_at(std::size_t n) const;
  bool operator==(const EstimatorSpec&) const = default;
};

struct ScenarioConfig {
  std::string scenario_id;
  std::size_t k = 1;
  std::vector<std::size_t> n_grid;
  std::size_t reps = 1;
  double noise_variance = 0.0;

  SpectrumRule spectrum_rule = SpectrumRule::Explicit;
  double lower_bound_c1 = 1.0;  // LowerBound rule
  double lower_bound_c2 = 1.0;
  std::vector<double> explicit_eigenvalues;  // Explicit rule

  TargetRule target_rule = TargetRule::Identity;
  double target_norm_T = 1.0;  // ScaledRandom rule
  double target_ratio = 1.0;
  std::vector<std::vector<double>> explicit_target_top;  // Explicit rule, k x k
  std::vector<double> explicit_target_tail;              // Explicit rule, diagonal tail

  std::vector<EstimatorSpec> estimators;
  bool exact_risk = true;
  std::size_t tail_block_size = 64;

  void validate() const;  // throws ConfigError naming the offending field
  bool has_pcr() const;
  double noise_sd() const;
  bool operator==(const ScenarioConfig&) const = default;
};

/// One Monte-Carlo cell.
struct RiskRecord {
  std::string scenario_id;
  std::string estimator;
  std::size_t n = 0;
  std::size_t rep = 0;
  double lambda = 0.0;
  double excess_risk = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  std::size_t samples_used = 0;
  std::uint64_t seed = 0;
  bool failed = false;
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_value = 0.0;
  std::size_t points_used = 0;
};

/// Benign-overfitting scenario: spiked source with an n^{-1.5} tail of
/// dimension n^2, minimum-norm interpolation, scaled-random targets.
ScenarioConfig scenario_benign(double norm_T, double ratio);

/// Large-shift scenario: n^{-0.5} tail of dimension floor(sqrt(n)), identity
/// target, ridge at several lambda schedules plus PCR.
ScenarioConfig scenario_large_shift();

Spectrum build_spectrum(const ScenarioConfig& config, std::size_t n);
TargetCovariance build_target(const ScenarioConfig& config, const Spectrum& spec, std::size_t n,
                              std::uint64_t master_seed);
std::vector<double> build_beta(const ScenarioConfig& config, std::size_t d);

/// Substream seed for one cell; sentinel words derive auxiliary streams.
std::uint64_t substream_seed(std::uint64_t master_seed, const std::string& scenario_id,
                             std::uint64_t a, std::uint64_t b, std::uint64_t c);

/// Runs every (n, rep, estimator) cell and returns records ordered by
/// (n, rep, estimator index). Output is a pure function of (config, seed),
/// independent of thread count. threads = 0 picks the hardware default.
std::vector<RiskRecord> run_sweep(const ScenarioConfig& config, std::uint64_t master_seed,
                                  std::size_t threads = 0);

/// OLS of log10(mean excess risk per n) on log10(n) for one estimator.
SlopeFit slope_fit(const std::vector<RiskRecord>& records, const std::string& estimator);

void write_records(const std::vector<RiskRecord>& records, const std::string& path);
std::vector<RiskRecord> read_records(const std::string& path);

ScenarioConfig read_config(const std::string& path);
ScenarioConfig parse_config_json(const std::string& text);
std::string config_to_json(const ScenarioConfig& config);
void write_config(const ScenarioConfig& config, const std::string& path);

}  // namespace shiftlab::sim

#endif
