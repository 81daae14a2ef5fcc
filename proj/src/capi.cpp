#include "shiftlab/shiftlab.h"

#include <cstring>
#include <new>
#include <string>

#include "report.hpp"
#include "sim.hpp"

struct shiftlab_ctx {
  std::string error;
};

namespace {

char *copy_string(const std::string &s) {
  char *out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

// Runs fn, records any failure message on the context, maps the exception
// class onto the status enum.
template <typename Fn>
shiftlab_status guarded(shiftlab_ctx *ctx, Fn &&fn) {
  if (ctx == nullptr) return SHIFTLAB_ERR_CONFIG;
  ctx->error.clear();
  try {
    fn();
    return SHIFTLAB_OK;
  } catch (const shiftlab::ConfigError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_CONFIG;
  } catch (const shiftlab::InputError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_CONFIG;
  } catch (const shiftlab::StructuralError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_CONFIG;
  } catch (const shiftlab::IoError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_IO;
  } catch (const shiftlab::DomainError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_NUMERIC;
  } catch (const shiftlab::NumericalError &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_NUMERIC;
  } catch (const std::bad_alloc &) {
    ctx->error = "out of memory";
    return SHIFTLAB_ERR_NUMERIC;
  } catch (const std::exception &e) {
    ctx->error = e.what();
    return SHIFTLAB_ERR_NUMERIC;
  }
}

shiftlab_status require(shiftlab_ctx *ctx, bool ok, const char *message) {
  if (ok) return SHIFTLAB_OK;
  if (ctx != nullptr) ctx->error = message;
  return SHIFTLAB_ERR_CONFIG;
}

}  // namespace

extern "C" {

shiftlab_ctx *shiftlab_ctx_new(void) { return new (std::nothrow) shiftlab_ctx; }

void shiftlab_ctx_free(shiftlab_ctx *ctx) { delete ctx; }

const char *shiftlab_ctx_error(const shiftlab_ctx *ctx) {
  return ctx == nullptr ? "" : ctx->error.c_str();
}

const char *shiftlab_version(void) { return "0.1.0"; }

shiftlab_status shiftlab_simulate(shiftlab_ctx *ctx, const char *config_path,
                                  uint64_t master_seed, const char *out_csv_path, int threads) {
  if (auto st = require(ctx, config_path != nullptr, "config_path: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, out_csv_path != nullptr, "out_csv_path: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, threads >= 0, "threads: must be >= 0"); st != SHIFTLAB_OK) return st;
  return guarded(ctx, [&] {
    const auto config = shiftlab::sim::read_config(config_path);
    const auto records =
        shiftlab::sim::run_sweep(config, master_seed, static_cast<std::size_t>(threads));
    shiftlab::sim::write_records(records, out_csv_path);
  });
}

shiftlab_status shiftlab_diagnose(shiftlab_ctx *ctx, const char *config_path, uint32_t n,
                                  uint64_t seed, char **out_json) {
  if (auto st = require(ctx, config_path != nullptr, "config_path: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, out_json != nullptr, "out_json: must not be null"); st != SHIFTLAB_OK)
    return st;
  return guarded(ctx, [&] {
    const auto config = shiftlab::sim::read_config(config_path);
    *out_json = copy_string(shiftlab::report::diagnose_json(config, n, seed));
  });
}

shiftlab_status shiftlab_theory(shiftlab_ctx *ctx, const char *config_path, uint32_t n,
                                double delta_prob, double sigma, char **out_json) {
  if (auto st = require(ctx, config_path != nullptr, "config_path: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, out_json != nullptr, "out_json: must not be null"); st != SHIFTLAB_OK)
    return st;
  return guarded(ctx, [&] {
    const auto config = shiftlab::sim::read_config(config_path);
    *out_json = copy_string(shiftlab::report::theory_json(config, n, delta_prob, sigma));
  });
}

shiftlab_status shiftlab_slope(shiftlab_ctx *ctx, const char *csv_path, const char *estimator,
                               char **out_json) {
  if (auto st = require(ctx, csv_path != nullptr, "csv_path: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, estimator != nullptr, "estimator: must not be null"); st != SHIFTLAB_OK)
    return st;
  if (auto st = require(ctx, out_json != nullptr, "out_json: must not be null"); st != SHIFTLAB_OK)
    return st;
  return guarded(ctx, [&] {
    const auto records = shiftlab::sim::read_records(csv_path);
    *out_json = copy_string(shiftlab::report::slope_json(records, estimator));
  });
}

shiftlab_status shiftlab_instance(shiftlab_ctx *ctx, uint32_t n, uint32_t k, double c1, double c2,
                                  char **out_json) {
  if (auto st = require(ctx, out_json != nullptr, "out_json: must not be null"); st != SHIFTLAB_OK)
    return st;
  return guarded(ctx, [&] { *out_json = copy_string(shiftlab::report::instance_json(n, k, c1, c2)); });
}

void shiftlab_string_free(char *s) { delete[] s; }

}  // extern "C"
