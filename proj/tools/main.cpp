// Command-line front end. Links against the C API only; machine-readable
// output goes to stdout, everything human-facing to stderr.

#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>

#include "shiftlab/shiftlab.h"

namespace {

// SHIFTLAB_THREADS caps worker parallelism; unset or 0 means all cores.
int threads_from_env(bool& ok) {
  ok = true;
  const char* raw = std::getenv("SHIFTLAB_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long value = std::strtol(raw, &end, 10);
  if (end == nullptr || *end != '\0' || value < 1) {
    ok = false;
    return 0;
  }
  return static_cast<int>(value);
}

int status_to_exit(shiftlab_status status) {
  switch (status) {
    case SHIFTLAB_OK:
      return 0;
    case SHIFTLAB_ERR_CONFIG:
      return 2;
    case SHIFTLAB_ERR_NUMERIC:
    case SHIFTLAB_ERR_IO:
      return 1;
  }
  return 1;
}

struct CtxGuard {
  shiftlab_ctx* ctx = shiftlab_ctx_new();
  ~CtxGuard() { shiftlab_ctx_free(ctx); }
};

int finish(const CtxGuard& guard, shiftlab_status status, char* json) {
  if (status == SHIFTLAB_OK && json != nullptr) std::fputs(json, stdout);
  if (status != SHIFTLAB_OK) std::fprintf(stderr, "error: %s\n", shiftlab_ctx_error(guard.ctx));
  shiftlab_string_free(json);
  return status_to_exit(status);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Over-parameterized regression under covariate shift: simulation and diagnostics"};
  app.require_subcommand(1);

  std::string config_path, out_path, csv_path, estimator;
  std::uint64_t seed = 0;
  unsigned n = 0, k = 0;
  double delta_prob = 0.05, sigma = 1.0, c1 = 1.0, c2 = 1.0;

  CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte-Carlo sweep and write the record CSV");
  simulate->add_option("--config", config_path, "Scenario config JSON")->required();
  simulate->add_option("--seed", seed, "Master seed (64-bit)")->required();
  simulate->add_option("--out", out_path, "Output CSV path")->required();

  CLI::App* diagnose = app.add_subcommand("diagnose", "Print shift diagnostics as JSON");
  diagnose->add_option("--config", config_path, "Scenario config JSON")->required();
  diagnose->add_option("--n", n, "Sample size")->required()->check(CLI::PositiveNumber);
  diagnose->add_option("--seed", seed, "Seed for the sampled design")->required();

  CLI::App* theory = app.add_subcommand("theory", "Print the bound-term report as JSON");
  theory->add_option("--config", config_path, "Scenario config JSON")->required();
  theory->add_option("--n", n, "Sample size")->required()->check(CLI::PositiveNumber);
  theory->add_option("--delta", delta_prob, "Failure probability for the subspace bound");
  theory->add_option("--sigma", sigma, "Sub-gaussian norm parameter");

  CLI::App* slope = app.add_subcommand("slope", "Fit the log-log risk slope from a record CSV");
  slope->add_option("--csv", csv_path, "Record CSV written by simulate")->required();
  slope->add_option("--estimator", estimator, "Estimator column to fit")->required();

  CLI::App* instance = app.add_subcommand("instance", "Print the slow-rate spectrum as JSON");
  instance->add_option("--n", n, "Sample size")->required()->check(CLI::PositiveNumber);
  instance->add_option("--k", k, "Number of major directions")->required()->check(CLI::PositiveNumber);
  instance->add_option("--c1", c1, "Tail eigenvalue scale");
  instance->add_option("--c2", c2, "Tail width divisor");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }

  bool env_ok = true;
  const int threads = threads_from_env(env_ok);
  if (!env_ok) {
    std::fprintf(stderr, "error: SHIFTLAB_THREADS: must be a positive integer\n");
    return 2;
  }

  CtxGuard guard;
  if (guard.ctx == nullptr) {
    std::fprintf(stderr, "error: out of memory\n");
    return 1;
  }

  char* json = nullptr;
  if (simulate->parsed()) {
    const shiftlab_status status =
        shiftlab_simulate(guard.ctx, config_path.c_str(), seed, out_path.c_str(), threads);
    if (status == SHIFTLAB_OK) std::fprintf(stderr, "simulate: wrote %s\n", out_path.c_str());
    return finish(guard, status, nullptr);
  }
  if (diagnose->parsed()) {
    const shiftlab_status status = shiftlab_diagnose(guard.ctx, config_path.c_str(), n, seed, &json);
    return finish(guard, status, json);
  }
  if (theory->parsed()) {
    const shiftlab_status status =
        shiftlab_theory(guard.ctx, config_path.c_str(), n, delta_prob, sigma, &json);
    return finish(guard, status, json);
  }
  if (slope->parsed()) {
    const shiftlab_status status = shiftlab_slope(guard.ctx, csv_path.c_str(), estimator.c_str(), &json);
    return finish(guard, status, json);
  }
  if (instance->parsed()) {
    const shiftlab_status status = shiftlab_instance(guard.ctx, n, k, c1, c2, &json);
    return finish(guard, status, json);
  }

  std::fprintf(stderr, "error: no subcommand\n");
  return 2;
}
