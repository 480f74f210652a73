#ifndef BAMLD_H
#define BAMLD_H

/* Generated by cbindgen from the bamld-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by fallible functions.
 */
enum BamldStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  BAMLD_STATUS_OK = 0,
  BAMLD_STATUS_NULL_POINTER = 1,
  BAMLD_STATUS_INVALID_UTF8 = 2,
  BAMLD_STATUS_INVALID_CONFIG = 3,
  BAMLD_STATUS_RUNTIME_ERROR = 4,
  BAMLD_STATUS_BUFFER_TOO_SMALL = 5,
  BAMLD_STATUS_SUITE_FAILED = 6,
};
#ifndef __cplusplus
typedef int32_t BamldStatus;
#endif // __cplusplus

/**
 * An experiment configuration behind an opaque handle.
 */
typedef struct BamldExperiment BamldExperiment;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *bamld_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *bamld_version(void);

/**
 * Parses a JSON experiment config (same schema as the CLI's config file;
 * missing keys take profile defaults). Returns NULL on error.
 *
 * # Safety
 * `json` must be a valid NUL-terminated string or NULL.
 */
BamldExperiment *bamld_experiment_from_json(const char *json);

/**
 * Runs the experiment, writing results under `out_dir` (overriding the
 * config's output directory when non-NULL).
 *
 * # Safety
 * `handle` must come from [`bamld_experiment_from_json`] and not be freed;
 * `out_dir` must be NULL or a valid NUL-terminated string.
 */
BamldStatus bamld_experiment_run(const BamldExperiment *handle, const char *out_dir);

/**
 * Releases an experiment handle. NULL is a no-op.
 *
 * # Safety
 * `handle` must come from [`bamld_experiment_from_json`] and not have been
 * freed already.
 */
void bamld_experiment_free(BamldExperiment *handle);

/**
 * Runs one (seed, method) active-learning run of the configured RMSE
 * experiment and writes the per-round RMSE curve into `out`. `written`
 * receives the number of rounds.
 *
 * # Safety
 * `handle`, `method`, `out`, and `written` must be valid; `out` must have
 * room for `out_len` doubles.
 */
BamldStatus bamld_rmse_curve(const BamldExperiment *handle,
                             uint64_t seed,
                             const char *method,
                             double *out,
                             uintptr_t out_len,
                             uintptr_t *written);

/**
 * The black-box objective `2 w1 p1(x) + 1.5 w2 p2(x) + 1.8 w3 p3(x) + 1`.
 */
double bamld_bo_objective(double w1,
                          double w2,
                          double w3,
                          double alpha1,
                          double alpha2,
                          double alpha3,
                          double x);

/**
 * The regression mean function `alpha x + a sin(1.5 (x - b)) + c`.
 */
double bamld_sinusoid_mean(double a, double b, double c, double alpha, double x);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* BAMLD_H */
