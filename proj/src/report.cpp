#include "report.hpp"

#include <json.hpp>

#include <cmath>

#include "theory.hpp"

namespace shiftlab::report {

using json = nlohmann::json;

namespace {

const std::uint64_t kDiagnoseTag = linalg::fnv1a64("diagnose");

// JSON has no infinity literal; the flag value serializes as a string.
json number_or_inf(double v) {
  if (std::isfinite(v)) return v;
  return "inf";
}

double first_lambda(const sim::ScenarioConfig& config, std::size_t n) {
  return config.estimators.front().lambda_at(n);
}

}  // namespace

std::string diagnose_json(const sim::ScenarioConfig& config, std::size_t n, std::uint64_t seed) {
  const model::Spectrum spec = sim::build_spectrum(config, n);
  const model::TargetCovariance target = sim::build_target(config, spec, n, seed);
  const double lambda = first_lambda(config, n);
  const model::ShiftDiagnostics diag = model::shift_diagnostics(spec, target, n, lambda);
  const model::EffectiveRanks ranks = model::effective_ranks(spec, lambda);

  linalg::Rng rng(sim::substream_seed(seed, config.scenario_id, n, kDiagnoseTag, 0));
  const linalg::Matrix x = model::sample_design(spec, n, rng);
  const theory::CondNumReport cond = theory::condnum_check(x, spec.k(), lambda);

  json root;
  root["scenario"] = config.scenario_id;
  root["n"] = n;
  root["k"] = spec.k();
  root["d"] = spec.dim();
  root["lambda"] = lambda;
  root["shift"] = {
      {"tr_T", number_or_inf(diag.tr_T)},
      {"norm_T", number_or_inf(diag.norm_T)},
      {"trU_over_trV", number_or_inf(diag.trU_over_trV)},
      {"highdim_factor", number_or_inf(diag.highdim_factor)},
      {"r_full", number_or_inf(diag.r_full)},
  };
  root["effective_ranks"] = {
      {"r_k", number_or_inf(ranks.r_k)},
      {"R_k", number_or_inf(ranks.R_k)},
  };
  root["condnum"] = {
      {"mu_1", number_or_inf(cond.mu_1)},
      {"mu_n", number_or_inf(cond.mu_n)},
      {"ratio", number_or_inf(cond.ratio)},
      {"lambda_used", cond.lambda_used},
  };
  return root.dump(2) + "\n";
}

std::string theory_json(const sim::ScenarioConfig& config, std::size_t n, double delta_prob,
                        double sigma) {
  const model::Spectrum spec = sim::build_spectrum(config, n);
  const model::TargetCovariance target = sim::build_target(config, spec, n, 0);
  const std::vector<double> beta = sim::build_beta(config, spec.dim());
  const double lambda = first_lambda(config, n);
  const double noise_sd = config.noise_sd();

  theory::BoundReport report =
      theory::ridge_bound_terms(spec, target, beta, n, lambda, noise_sd);
  report.delta_bound = theory::delta_bound(spec, n, delta_prob, sigma);
  const theory::BoundReport pcr =
      theory::pcr_bound_terms(spec, target, beta, n, noise_sd, report.delta_bound);
  report.pcr_var_term = pcr.pcr_var_term;
  report.pcr_bias_term = pcr.pcr_bias_term;

  json root;
  root["scenario"] = config.scenario_id;
  root["n"] = n;
  root["lambda"] = lambda;
  root["delta"] = delta_prob;
  root["sigma"] = sigma;
  root["constants_omitted"] = true;
  root["v_bound_major"] = number_or_inf(report.v_bound_major);
  root["v_bound_minor"] = number_or_inf(report.v_bound_minor);
  root["b_id"] = number_or_inf(report.b_id);
  root["b_bound"] = number_or_inf(report.b_bound);
  root["pcr_var_term"] = number_or_inf(report.pcr_var_term);
  root["pcr_bias_term"] = number_or_inf(report.pcr_bias_term);
  root["delta_bound"] = number_or_inf(report.delta_bound);
  return root.dump(2) + "\n";
}

std::string slope_json(const std::vector<sim::RiskRecord>& records, const std::string& estimator) {
  const sim::SlopeFit fit = sim::slope_fit(records, estimator);
  json root;
  root["estimator"] = estimator;
  root["slope"] = fit.slope;
  root["intercept"] = fit.intercept;
  root["stderr"] = fit.stderr_value;
  root["points_used"] = fit.points_used;
  return root.dump(2) + "\n";
}

std::string instance_json(std::size_t n, std::size_t k, double c1, double c2) {
  const model::Spectrum spec = theory::lower_bound_instance(n, k, c1, c2);
  json root;
  root["n"] = n;
  root["k"] = k;
  root["c1"] = c1;
  root["c2"] = c2;
  root["d"] = spec.dim();
  root["eigenvalues"] = spec.eigenvalues();
  return root.dump(2) + "\n";
}

}  // namespace shiftlab::report
