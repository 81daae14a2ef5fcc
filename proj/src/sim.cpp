#include "sim.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "theory.hpp"

namespace shiftlab::sim {

using json = nlohmann::json;
using linalg::Matrix;
using linalg::Rng;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

const std::uint64_t kTargetTag = linalg::fnv1a64("target");

bool csv_safe(const std::string& s) {
  return !s.empty() && s.find_first_of(",\n\r") == std::string::npos;
}

std::size_t isqrt_floor(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while ((r + 1) * (r + 1) <= n) ++r;
  while (r * r > n) --r;
  return r;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string trimmed_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

}  // namespace

double EstimatorSpec::lambda_at(std::size_t n) const {
  switch (kind) {
    case EstimatorKind::Minnorm:
      return estimators::kMinnormLambda;
    case EstimatorKind::Pcr:
      return 0.0;
    case EstimatorKind::Ridge:
      break;
  }
  switch (lambda_rule) {
    case LambdaRule::Const:
      return lambda_value;
    case LambdaRule::Power:
      return std::pow(static_cast<double>(n), lambda_value);
    case LambdaRule::SqrtN:
      return std::sqrt(static_cast<double>(n));
  }
  return 0.0;
}

bool ScenarioConfig::has_pcr() const {
  return std::any_of(estimators.begin(), estimators.end(),
                     [](const EstimatorSpec& e) { return e.kind == EstimatorKind::Pcr; });
}

double ScenarioConfig::noise_sd() const { return std::sqrt(noise_variance); }

void ScenarioConfig::validate() const {
  if (!csv_safe(scenario_id)) throw ConfigError("scenario: must be non-empty without commas or newlines");
  if (k < 1) throw ConfigError("k: must be >= 1");
  if (n_grid.size() < 3) throw ConfigError("n_grid: slope fitting needs at least 3 sample sizes");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 1) throw ConfigError("n_grid: entries must be >= 1");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) throw ConfigError("n_grid: must be strictly increasing");
  }
  if (reps < 1) throw ConfigError("reps: must be >= 1");
  if (!(noise_variance >= 0.0)) throw ConfigError("noise_variance: must be >= 0");
  if (tail_block_size < 1) throw ConfigError("tail_block_size: must be >= 1");

  if (spectrum_rule == SpectrumRule::LowerBound && (!(lower_bound_c1 > 0.0) || !(lower_bound_c2 > 0.0)))
    throw ConfigError("spectrum.c1/c2: must be positive");
  if (spectrum_rule == SpectrumRule::Explicit) {
    if (explicit_eigenvalues.size() <= k)
      throw ConfigError("spectrum.eigenvalues: needs more than k entries");
  }
  if (target_rule == TargetRule::ScaledRandom && (!(target_norm_T > 0.0) || !(target_ratio > 0.0)))
    throw ConfigError("target.norm_T/ratio: must be positive");
  if (target_rule == TargetRule::Explicit) {
    if (spectrum_rule != SpectrumRule::Explicit)
      throw ConfigError("target.rule: explicit target requires an explicit spectrum");
    if (explicit_target_top.size() != k) throw ConfigError("target.top: must be k x k");
    for (const auto& row : explicit_target_top)
      if (row.size() != k) throw ConfigError("target.top: must be k x k");
    if (explicit_target_tail.size() != explicit_eigenvalues.size() - k)
      throw ConfigError("target.tail: length must equal d - k");
  }

  if (estimators.empty()) throw ConfigError("estimators: must not be empty");
  for (std::size_t i = 0; i < estimators.size(); ++i) {
    if (!csv_safe(estimators[i].name))
      throw ConfigError("estimators.name: must be non-empty without commas or newlines");
    for (std::size_t j = 0; j < i; ++j)
      if (estimators[j].name == estimators[i].name)
        throw ConfigError("estimators.name: duplicate name '" + estimators[i].name + "'");
    if (estimators[i].kind == EstimatorKind::Ridge && estimators[i].lambda_rule == LambdaRule::Const &&
        estimators[i].lambda_value < 0.0)
      throw ConfigError("estimators.lambda_value: const lambda must be >= 0");
  }
}

ScenarioConfig scenario_benign(double norm_T, double ratio) {
  if (!(norm_T > 0.0) || !(ratio > 0.0))
    throw InputError("scenario_benign: norm_T and ratio must be positive");
  ScenarioConfig config;
  config.scenario_id = "benign_normT" + trimmed_number(norm_T) + "_ratio" + trimmed_number(ratio);
  config.k = 10;
  config.n_grid = {25, 50, 100, 141, 200};
  config.reps = 10;
  config.noise_variance = 0.1;
  config.spectrum_rule = SpectrumRule::BenignTail;
  config.target_rule = TargetRule::ScaledRandom;
  config.target_norm_T = norm_T;
  config.target_ratio = ratio;
  config.estimators = {EstimatorSpec{"minnorm", EstimatorKind::Minnorm, LambdaRule::Const, 0.0}};
  return config;
}

ScenarioConfig scenario_large_shift() {
  ScenarioConfig config;
  config.scenario_id = "large_shift";
  config.k = 10;
  // The asymptotic regime of this scenario: the plateau of the sqrt(n) ridge
  // schedule and the 1/n PCR rate both need n in the hundreds before the
  // small-n transient (PCA from few samples, k/n variance) fades.
  config.n_grid = {100, 200, 400, 800, 1600};
  config.reps = 10;
  config.noise_variance = 0.1;
  config.spectrum_rule = SpectrumRule::LargeShiftTail;
  config.target_rule = TargetRule::Identity;
  config.estimators = {
      EstimatorSpec{"minnorm", EstimatorKind::Minnorm, LambdaRule::Const, 0.0},
      EstimatorSpec{"ridge_sqrtn", EstimatorKind::Ridge, LambdaRule::SqrtN, 0.0},
      EstimatorSpec{"ridge_pow0.75", EstimatorKind::Ridge, LambdaRule::Power, 0.75},
      EstimatorSpec{"ridge_pow1", EstimatorKind::Ridge, LambdaRule::Power, 1.0},
      EstimatorSpec{"pcr", EstimatorKind::Pcr, LambdaRule::Const, 0.0},
  };
  return config;
}

Spectrum build_spectrum(const ScenarioConfig& config, std::size_t n) {
  switch (config.spectrum_rule) {
    case SpectrumRule::BenignTail: {
      if (n > 20000) throw ConfigError("n_grid: benign_tail dimension n^2 too large at n > 20000");
      const std::size_t tail = n * n;
      std::vector<double> eigenvalues;
      eigenvalues.reserve(config.k + tail);
      eigenvalues.insert(eigenvalues.end(), config.k, 1.0);
      eigenvalues.insert(eigenvalues.end(), tail, std::pow(static_cast<double>(n), -1.5));
      return Spectrum(std::move(eigenvalues), config.k);
    }
    case SpectrumRule::LargeShiftTail: {
      const std::size_t tail = isqrt_floor(n);
      if (tail == 0) throw ConfigError("n_grid: large_shift_tail needs n >= 1");
      std::vector<double> eigenvalues;
      eigenvalues.reserve(config.k + tail);
      eigenvalues.insert(eigenvalues.end(), config.k, 1.0);
      eigenvalues.insert(eigenvalues.end(), tail, std::pow(static_cast<double>(n), -0.5));
      return Spectrum(std::move(eigenvalues), config.k);
    }
    case SpectrumRule::LowerBound:
      return theory::lower_bound_instance(n, config.k, config.lower_bound_c1, config.lower_bound_c2);
    case SpectrumRule::Explicit:
      return Spectrum(config.explicit_eigenvalues, config.k);
  }
  throw ConfigError("spectrum.rule: unknown rule");
}

TargetCovariance build_target(const ScenarioConfig& config, const Spectrum& spec, std::size_t n,
                              std::uint64_t master_seed) {
  switch (config.target_rule) {
    case TargetRule::ScaledRandom: {
      Rng rng(substream_seed(master_seed, config.scenario_id, n, kTargetTag, 0));
      return model::random_target(spec, config.target_norm_T, config.target_ratio,
                                  config.tail_block_size, rng);
    }
    case TargetRule::Identity:
      return TargetCovariance::identity(spec.k(), spec.dim() - spec.k(), config.tail_block_size);
    case TargetRule::Explicit: {
      const std::size_t k = spec.k();
      Matrix top(k, k);
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j) top(i, j) = config.explicit_target_top[i][j];
      std::vector<model::TailBlock> tail;
      std::size_t pos = 0;
      const std::size_t tail_dim = spec.dim() - k;
      while (pos < tail_dim) {
        const std::size_t b = std::min(config.tail_block_size, tail_dim - pos);
        model::TailBlock block;
        block.rotation = Matrix::identity(b);
        block.eigenvalues.assign(config.explicit_target_tail.begin() + static_cast<std::ptrdiff_t>(pos),
                                 config.explicit_target_tail.begin() + static_cast<std::ptrdiff_t>(pos + b));
        tail.push_back(std::move(block));
        pos += b;
      }
      return TargetCovariance(linalg::SymMatrix(std::move(top)), std::move(tail));
    }
  }
  throw ConfigError("target.rule: unknown rule");
}

std::vector<double> build_beta(const ScenarioConfig& config, std::size_t d) {
  std::vector<double> beta(d, 0.0);
  const double value = 1.0 / std::sqrt(static_cast<double>(config.k));
  for (std::size_t j = 0; j < config.k && j < d; ++j) beta[j] = value;
  return beta;
}

std::uint64_t substream_seed(std::uint64_t master_seed, const std::string& scenario_id,
                             std::uint64_t a, std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = master_seed;
  h = linalg::splitmix64_mix(h ^ linalg::fnv1a64(scenario_id));
  h = linalg::splitmix64_mix(h ^ a);
  h = linalg::splitmix64_mix(h ^ b);
  h = linalg::splitmix64_mix(h ^ c);
  return h;
}

namespace {

struct NContext {
  std::size_t n;
  Spectrum spec;
  TargetCovariance target;
  std::vector<double> beta;
};

double testset_risk(const estimators::Estimate& fit, std::span<const double> beta_star,
                    const TargetCovariance& target, std::size_t samples, Rng& rng) {
  std::vector<double> diff(beta_star.size());
  for (std::size_t j = 0; j < diff.size(); ++j) diff[j] = fit.beta_hat[j] - beta_star[j];
  const Matrix points = model::sample_target_points(target, samples, rng);
  double acc = 0.0;
  for (std::size_t i = 0; i < samples; ++i) {
    const double margin = linalg::dot(points.row(i), diff);
    acc += margin * margin;
  }
  return acc / static_cast<double>(samples);
}

RiskRecord run_cell(const ScenarioConfig& config, const NContext& ctx, std::size_t rep,
                    std::size_t est_idx, std::uint64_t master_seed) {
  const EstimatorSpec& spec_est = config.estimators[est_idx];
  const std::size_t n = ctx.n;

  RiskRecord record;
  record.scenario_id = config.scenario_id;
  record.estimator = spec_est.name;
  record.n = n;
  record.rep = rep;
  record.lambda = spec_est.lambda_at(n);
  record.seed = substream_seed(master_seed, config.scenario_id, n, rep, est_idx);
  record.samples_used = spec_est.kind == EstimatorKind::Pcr ? 2 * n : n;

  Rng rng(record.seed);
  const std::size_t rows = config.has_pcr() ? 2 * n : n;
  const double noise_sd = config.noise_sd();

  try {
    const model::Dataset data = model::make_dataset(ctx.spec, ctx.beta, noise_sd, rows, rng);
    const Matrix& x = data.x;
    const std::vector<double>& y = data.y;

    estimators::Estimate fit;
    estimators::RiskSplit split;
    if (spec_est.kind == EstimatorKind::Pcr) {
      const Matrix x1 = x.row_slice(0, n);
      const Matrix x2 = x.row_slice(n, 2 * n);
      const std::span<const double> y2{y.data() + n, n};
      fit = estimators::pcr_fit(x1, x2, y2, config.k);
      split = estimators::pcr_risk_split(*fit.subspace, x2, ctx.beta, ctx.target, noise_sd);
    } else {
      // Non-PCR estimators train on the last n rows of the drawn block.
      Matrix sliced;
      const Matrix* xu = &x;
      if (rows != n) {
        sliced = x.row_slice(rows - n, rows);
        xu = &sliced;
      }
      const std::span<const double> yu{y.data() + (rows - n), n};
      const linalg::SymMatrix gram = linalg::SymMatrix::gram_rows(*xu);
      fit = estimators::ridge_fit_with_gram(*xu, gram, yu, record.lambda);
      if (spec_est.kind == EstimatorKind::Minnorm) fit.method = estimators::Method::Minnorm;
      split = estimators::ridge_risk_split_with_gram(*xu, gram, ctx.beta, record.lambda,
                                                     ctx.target, noise_sd);
    }

    record.bias = split.bias;
    record.variance = split.variance;
    record.excess_risk = config.exact_risk
                             ? estimators::excess_risk(fit, ctx.beta, ctx.target)
                             : testset_risk(fit, ctx.beta, ctx.target, 1000, rng);
  } catch (const InputError&) {
    record.failed = true;
  } catch (const StructuralError&) {
    record.failed = true;
  } catch (const DomainError&) {
    record.failed = true;
  } catch (const NumericalError&) {
    record.failed = true;
  }
  if (record.failed) {
    record.excess_risk = kNan;
    record.bias = kNan;
    record.variance = kNan;
  }
  return record;
}

}  // namespace

std::vector<RiskRecord> run_sweep(const ScenarioConfig& config, std::uint64_t master_seed,
                                  std::size_t threads) {
  config.validate();

  std::vector<NContext> contexts;
  contexts.reserve(config.n_grid.size());
  for (std::size_t n : config.n_grid) {
    Spectrum spec = build_spectrum(config, n);
    TargetCovariance target = build_target(config, spec, n, master_seed);
    std::vector<double> beta = build_beta(config, spec.dim());
    contexts.push_back(NContext{n, std::move(spec), std::move(target), std::move(beta)});
  }

  struct Task {
    std::size_t ctx_idx;
    std::size_t rep;
    std::size_t est_idx;
  };
  std::vector<Task> tasks;
  tasks.reserve(contexts.size() * config.reps * config.estimators.size());
  for (std::size_t c = 0; c < contexts.size(); ++c)
    for (std::size_t rep = 0; rep < config.reps; ++rep)
      for (std::size_t e = 0; e < config.estimators.size(); ++e) tasks.push_back(Task{c, rep, e});

  std::vector<RiskRecord> records(tasks.size());
  std::size_t worker_count = threads == 0 ? std::thread::hardware_concurrency() : threads;
  worker_count = std::max<std::size_t>(1, std::min(worker_count, tasks.size()));

  std::atomic<std::size_t> next{0};
  std::exception_ptr fatal;
  std::mutex fatal_mutex;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      try {
        const Task& task = tasks[i];
        records[i] = run_cell(config, contexts[task.ctx_idx], task.rep, task.est_idx, master_seed);
      } catch (...) {
        const std::lock_guard<std::mutex> lock(fatal_mutex);
        if (!fatal) fatal = std::current_exception();
        return;
      }
    }
  };

  if (worker_count == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(worker_count);
    for (std::size_t t = 0; t < worker_count; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  if (fatal) std::rethrow_exception(fatal);

  // Task enumeration is already (n, rep, estimator)-ordered; keep the
  // guarantee explicit in case the enumeration ever changes.
  std::stable_sort(records.begin(), records.end(), [](const RiskRecord& a, const RiskRecord& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.rep != b.rep) return a.rep < b.rep;
    return a.estimator < b.estimator;
  });
  return records;
}

SlopeFit slope_fit(const std::vector<RiskRecord>& records, const std::string& estimator) {
  std::map<std::size_t, std::pair<double, std::size_t>> groups;  // n -> (sum, count)
  for (const RiskRecord& r : records) {
    if (r.estimator != estimator || r.failed || !std::isfinite(r.excess_risk)) continue;
    auto& bucket = groups[r.n];
    bucket.first += r.excess_risk;
    bucket.second += 1;
  }
  if (groups.size() < 3)
    throw InputError("slope_fit: need at least 3 distinct n values for estimator '" + estimator + "'");

  std::vector<double> xs, ys;
  for (const auto& [n, bucket] : groups) {
    const double mean = bucket.first / static_cast<double>(bucket.second);
    if (!(mean > 0.0)) throw DomainError("slope_fit: nonpositive mean excess risk at n=" + std::to_string(n));
    xs.push_back(std::log10(static_cast<double>(n)));
    ys.push_back(std::log10(mean));
  }

  const auto m = static_cast<double>(xs.size());
  double x_mean = 0.0, y_mean = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    x_mean += xs[i];
    y_mean += ys[i];
  }
  x_mean /= m;
  y_mean /= m;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - x_mean) * (xs[i] - x_mean);
    sxy += (xs[i] - x_mean) * (ys[i] - y_mean);
  }

  SlopeFit fit;
  fit.points_used = xs.size();
  fit.slope = sxy / sxx;
  fit.intercept = y_mean - fit.slope * x_mean;
  double ssr = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double resid = ys[i] - (fit.intercept + fit.slope * xs[i]);
    ssr += resid * resid;
  }
  fit.stderr_value = xs.size() > 2 ? std::sqrt(std::max(ssr, 0.0) / (m - 2.0) / sxx) : 0.0;
  return fit;
}

void write_records(const std::vector<RiskRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_records: cannot open '" + path + "' for writing");
  out << "scenario_id,estimator,n,rep,lambda,excess_risk,bias,variance,samples_used,seed_hex,failed\n";
  char seed_buf[20];
  for (const RiskRecord& r : records) {
    std::snprintf(seed_buf, sizeof(seed_buf), "%016" PRIx64, r.seed);
    out << r.scenario_id << ',' << r.estimator << ',' << r.n << ',' << r.rep << ','
        << format_double(r.lambda) << ',' << format_double(r.excess_risk) << ','
        << format_double(r.bias) << ',' << format_double(r.variance) << ',' << r.samples_used
        << ',' << seed_buf << ',' << (r.failed ? 1 : 0) << '\n';
  }
  if (!out) throw IoError("write_records: write failed for '" + path + "'");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

}  // namespace

std::vector<RiskRecord> read_records(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string expected =
      "scenario_id,estimator,n,rep,lambda,excess_risk,bias,variance,samples_used,seed_hex,failed";
  if (line != expected) throw ConfigError("csv: unexpected header in '" + path + "'");

  std::vector<RiskRecord> records;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_csv_line(line);
    if (f.size() != 11) throw ConfigError("csv: malformed row in '" + path + "'");
    RiskRecord r;
    try {
      r.scenario_id = f[0];
      r.estimator = f[1];
      r.n = std::stoull(f[2]);
      r.rep = std::stoull(f[3]);
      r.lambda = std::strtod(f[4].c_str(), nullptr);
      r.excess_risk = std::strtod(f[5].c_str(), nullptr);
      r.bias = std::strtod(f[6].c_str(), nullptr);
      r.variance = std::strtod(f[7].c_str(), nullptr);
      r.samples_used = std::stoull(f[8]);
      r.seed = std::stoull(f[9], nullptr, 16);
      r.failed = f[10] == "1";
    } catch (const std::logic_error&) {
      throw ConfigError("csv: malformed row in '" + path + "'");
    }
    records.push_back(std::move(r));
  }
  return records;
}

namespace {

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& [key, value] : obj.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError(where + ": unknown key '" + key + "'");
  }
}

double require_number(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || !obj[key].is_number())
    throw ConfigError(where + "." + key + ": required number");
  return obj[key].get<double>();
}

}  // namespace

ScenarioConfig parse_config_json(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON (") + e.what() + ")");
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  reject_unknown_keys(root,
                      {"scenario", "k", "n_grid", "reps", "noise_variance", "spectrum", "target",
                       "estimators", "exact_risk", "tail_block_size"},
                      "config");

  ScenarioConfig config;
  if (!root.contains("scenario") || !root["scenario"].is_string())
    throw ConfigError("scenario: required string");
  config.scenario_id = root["scenario"].get<std::string>();

  if (!root.contains("k") || !root["k"].is_number_integer() || root["k"].get<long long>() < 1)
    throw ConfigError("k: required integer >= 1");
  config.k = root["k"].get<std::size_t>();

  if (!root.contains("n_grid") || !root["n_grid"].is_array())
    throw ConfigError("n_grid: required integer array");
  config.n_grid.clear();
  for (const auto& item : root["n_grid"]) {
    if (!item.is_number_integer() || item.get<long long>() < 1)
      throw ConfigError("n_grid: entries must be integers >= 1");
    config.n_grid.push_back(item.get<std::size_t>());
  }

  if (!root.contains("reps") || !root["reps"].is_number_integer() || root["reps"].get<long long>() < 1)
    throw ConfigError("reps: required integer >= 1");
  config.reps = root["reps"].get<std::size_t>();

  if (!root.contains("noise_variance") || !root["noise_variance"].is_number() ||
      root["noise_variance"].get<double>() < 0.0)
    throw ConfigError("noise_variance: required number >= 0");
  config.noise_variance = root["noise_variance"].get<double>();

  if (!root.contains("spectrum") || !root["spectrum"].is_object())
    throw ConfigError("spectrum: required object");
  {
    const json& spec = root["spectrum"];
    if (!spec.contains("rule") || !spec["rule"].is_string())
      throw ConfigError("spectrum.rule: required string");
    const std::string rule = spec["rule"].get<std::string>();
    if (rule == "benign_tail") {
      reject_unknown_keys(spec, {"rule"}, "spectrum");
      config.spectrum_rule = SpectrumRule::BenignTail;
    } else if (rule == "large_shift_tail") {
      reject_unknown_keys(spec, {"rule"}, "spectrum");
      config.spectrum_rule = SpectrumRule::LargeShiftTail;
    } else if (rule == "lower_bound") {
      reject_unknown_keys(spec, {"rule", "c1", "c2"}, "spectrum");
      config.spectrum_rule = SpectrumRule::LowerBound;
      config.lower_bound_c1 = spec.contains("c1") ? require_number(spec, "c1", "spectrum") : 1.0;
      config.lower_bound_c2 = spec.contains("c2") ? require_number(spec, "c2", "spectrum") : 1.0;
    } else if (rule == "explicit") {
      reject_unknown_keys(spec, {"rule", "eigenvalues"}, "spectrum");
      config.spectrum_rule = SpectrumRule::Explicit;
      if (!spec.contains("eigenvalues") || !spec["eigenvalues"].is_array())
        throw ConfigError("spectrum.eigenvalues: required number array");
      for (const auto& item : spec["eigenvalues"]) {
        if (!item.is_number()) throw ConfigError("spectrum.eigenvalues: entries must be numbers");
        config.explicit_eigenvalues.push_back(item.get<double>());
      }
    } else {
      throw ConfigError("spectrum.rule: unknown rule '" + rule + "'");
    }
  }

  if (!root.contains("target") || !root["target"].is_object())
    throw ConfigError("target: required object");
  {
    const json& target = root["target"];
    if (!target.contains("rule") || !target["rule"].is_string())
      throw ConfigError("target.rule: required string");
    const std::string rule = target["rule"].get<std::string>();
    if (rule == "scaled_random") {
      reject_unknown_keys(target, {"rule", "norm_T", "ratio"}, "target");
      config.target_rule = TargetRule::ScaledRandom;
      config.target_norm_T = require_number(target, "norm_T", "target");
      config.target_ratio = require_number(target, "ratio", "target");
    } else if (rule == "identity") {
      reject_unknown_keys(target, {"rule"}, "target");
      config.target_rule = TargetRule::Identity;
    } else if (rule == "explicit") {
      reject_unknown_keys(target, {"rule", "top", "tail"}, "target");
      config.target_rule = TargetRule::Explicit;
      if (!target.contains("top") || !target["top"].is_array())
        throw ConfigError("target.top: required array of rows");
      for (const auto& row : target["top"]) {
        if (!row.is_array()) throw ConfigError("target.top: rows must be arrays");
        std::vector<double> parsed;
        for (const auto& item : row) {
          if (!item.is_number()) throw ConfigError("target.top: entries must be numbers");
          parsed.push_back(item.get<double>());
        }
        config.explicit_target_top.push_back(std::move(parsed));
      }
      if (!target.contains("tail") || !target["tail"].is_array())
        throw ConfigError("target.tail: required number array");
      for (const auto& item : target["tail"]) {
        if (!item.is_number()) throw ConfigError("target.tail: entries must be numbers");
        config.explicit_target_tail.push_back(item.get<double>());
      }
    } else {
      throw ConfigError("target.rule: unknown rule '" + rule + "'");
    }
  }

  if (!root.contains("estimators") || !root["estimators"].is_array())
    throw ConfigError("estimators: required array");
  for (const auto& entry : root["estimators"]) {
    if (!entry.is_object()) throw ConfigError("estimators: entries must be objects");
    reject_unknown_keys(entry, {"name", "lambda_rule", "lambda_value"}, "estimators");
    if (!entry.contains("name") || !entry["name"].is_string())
      throw ConfigError("estimators.name: required string");
    EstimatorSpec est;
    est.name = entry["name"].get<std::string>();
    if (est.name == "minnorm" || est.name == "pcr") {
      est.kind = est.name == "pcr" ? EstimatorKind::Pcr : EstimatorKind::Minnorm;
      if (entry.contains("lambda_rule") || entry.contains("lambda_value"))
        throw ConfigError("estimators.lambda_rule: not applicable to '" + est.name + "'");
    } else if (est.name.rfind("ridge", 0) == 0) {
      est.kind = EstimatorKind::Ridge;
      if (!entry.contains("lambda_rule") || !entry["lambda_rule"].is_string())
        throw ConfigError("estimators.lambda_rule: required for ridge estimators");
      const std::string rule = entry["lambda_rule"].get<std::string>();
      if (rule == "const") {
        est.lambda_rule = LambdaRule::Const;
        est.lambda_value = require_number(entry, "lambda_value", "estimators");
      } else if (rule == "power") {
        est.lambda_rule = LambdaRule::Power;
        est.lambda_value = require_number(entry, "lambda_value", "estimators");
      } else if (rule == "sqrt_n") {
        est.lambda_rule = LambdaRule::SqrtN;
        if (entry.contains("lambda_value"))
          throw ConfigError("estimators.lambda_value: not applicable to rule sqrt_n");
      } else {
        throw ConfigError("estimators.lambda_rule: unknown rule '" + rule + "'");
      }
    } else {
      throw ConfigError("estimators.name: must be 'minnorm', 'pcr', or start with 'ridge'");
    }
    config.estimators.push_back(std::move(est));
  }

  if (root.contains("exact_risk")) {
    if (!root["exact_risk"].is_boolean()) throw ConfigError("exact_risk: must be a boolean");
    config.exact_risk = root["exact_risk"].get<bool>();
  }
  if (root.contains("tail_block_size")) {
    if (!root["tail_block_size"].is_number_integer() || root["tail_block_size"].get<long long>() < 1)
      throw ConfigError("tail_block_size: must be an integer >= 1");
    config.tail_block_size = root["tail_block_size"].get<std::size_t>();
  }

  config.validate();
  return config;
}

ScenarioConfig read_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

std::string config_to_json(const ScenarioConfig& config) {
  json root;
  root["scenario"] = config.scenario_id;
  root["k"] = config.k;
  root["n_grid"] = config.n_grid;
  root["reps"] = config.reps;
  root["noise_variance"] = config.noise_variance;

  json spec;
  switch (config.spectrum_rule) {
    case SpectrumRule::BenignTail:
      spec["rule"] = "benign_tail";
      break;
    case SpectrumRule::LargeShiftTail:
      spec["rule"] = "large_shift_tail";
      break;
    case SpectrumRule::LowerBound:
      spec["rule"] = "lower_bound";
      spec["c1"] = config.lower_bound_c1;
      spec["c2"] = config.lower_bound_c2;
      break;
    case SpectrumRule::Explicit:
      spec["rule"] = "explicit";
      spec["eigenvalues"] = config.explicit_eigenvalues;
      break;
  }
  root["spectrum"] = spec;

  json target;
  switch (config.target_rule) {
    case TargetRule::ScaledRandom:
      target["rule"] = "scaled_random";
      target["norm_T"] = config.target_norm_T;
      target["ratio"] = config.target_ratio;
      break;
    case TargetRule::Identity:
      target["rule"] = "identity";
      break;
    case TargetRule::Explicit:
      target["rule"] = "explicit";
      target["top"] = config.explicit_target_top;
      target["tail"] = config.explicit_target_tail;
      break;
  }
  root["target"] = target;

  json estimators = json::array();
  for (const EstimatorSpec& est : config.estimators) {
    json entry;
    entry["name"] = est.name;
    if (est.kind == EstimatorKind::Ridge) {
      switch (est.lambda_rule) {
        case LambdaRule::Const:
          entry["lambda_rule"] = "const";
          entry["lambda_value"] = est.lambda_value;
          break;
        case LambdaRule::Power:
          entry["lambda_rule"] = "power";
          entry["lambda_value"] = est.lambda_value;
          break;
        case LambdaRule::SqrtN:
          entry["lambda_rule"] = "sqrt_n";
          break;
      }
    }
    estimators.push_back(entry);
  }
  root["estimators"] = estimators;
  root["exact_risk"] = config.exact_risk;
  root["tail_block_size"] = config.tail_block_size;
  return root.dump(2) + "\n";
}

void write_config(const ScenarioConfig& config, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("write_config: cannot open '" + path + "' for writing");
  out << config_to_json(config);
  if (!out) throw IoError("write_config: write failed for '" + path + "'");
}

}  // namespace shiftlab::sim
