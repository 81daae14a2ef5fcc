/* shiftlab: over-parameterized regression under covariate shift.
 *
 * C interface to the shared library. All entry points are thread-compatible:
 * distinct contexts may be used concurrently, a single context must not.
 * Strings returned through char** are heap-allocated UTF-8 and must be
 * released with shiftlab_string_free().
 */
#ifndef SHIFTLAB_H
#define SHIFTLAB_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef struct shiftlab_ctx shiftlab_ctx;

typedef enum shiftlab_status {
  SHIFTLAB_OK = 0,
  SHIFTLAB_ERR_NUMERIC = 1, /* runtime numerical failure */
  SHIFTLAB_ERR_CONFIG = 2,  /* invalid config file, flag value, or input */
  SHIFTLAB_ERR_IO = 3       /* filesystem failure while writing output */
} shiftlab_status;

shiftlab_ctx *shiftlab_ctx_new(void);
void shiftlab_ctx_free(shiftlab_ctx *ctx);

/* Message for the most recent failure on this context; empty string if none. */
const char *shiftlab_ctx_error(const shiftlab_ctx *ctx);

const char *shiftlab_version(void);

/* Runs the Monte-Carlo sweep described by the JSON config and writes the
 * record CSV to out_csv_path. threads = 0 uses all available cores; the
 * output bytes do not depend on the thread count. */
shiftlab_status shiftlab_simulate(shiftlab_ctx *ctx, const char *config_path,
                                  uint64_t master_seed, const char *out_csv_path,
                                  int threads);

/* Shift diagnostics, effective ranks, and a condition-number check on one
 * design sampled at size n. *out_json receives a JSON object. */
shiftlab_status shiftlab_diagnose(shiftlab_ctx *ctx, const char *config_path,
                                  uint32_t n, uint64_t seed, char **out_json);

/* Bound-term report at size n (rate expressions; absolute constants of the
 * underlying statements are omitted and flagged as such). */
shiftlab_status shiftlab_theory(shiftlab_ctx *ctx, const char *config_path, uint32_t n,
                                double delta_prob, double sigma, char **out_json);

/* Log-log slope of mean excess risk against n for one estimator column of a
 * previously written record CSV. */
shiftlab_status shiftlab_slope(shiftlab_ctx *ctx, const char *csv_path,
                               const char *estimator, char **out_json);

/* The slow-rate source spectrum: k unit eigenvalues, floor(sqrt(n)/c2)
 * eigenvalues of c1/sqrt(n), one trailing zero. */
shiftlab_status shiftlab_instance(shiftlab_ctx *ctx, uint32_t n, uint32_t k, double c1,
                                  double c2, char **out_json);

void shiftlab_string_free(char *s);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SHIFTLAB_H */
