#ifndef PBDL_H
#define PBDL_H

/* Generated by cbindgen; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of an FFI call.
 */
typedef enum PbdlStatus {
  PBDL_OK = 0,
  /**
   * A required pointer was null.
   */
  PBDL_NULL_POINTER = 1,
  /**
   * Malformed input (bad JSON, bad dimensions, bad arguments).
   */
  PBDL_INVALID_ARGUMENT = 2,
  /**
   * The optimizer failed or the trained program was infeasible.
   */
  PBDL_SOLVER_FAILURE = 3,
} PbdlStatus;

/**
 * Opaque learned divergence model.
 */
typedef struct PbdlModel PbdlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent error on this thread. The pointer stays valid
 * until the next failing call on the same thread. Never null.
 */
const char *pbdl_last_error_message(void);

/**
 * Parse a model from its JSON form. On success writes a handle to `out`;
 * release it with [`pbdl_model_free`].
 *
 * # Safety
 * `json` must be a valid NUL-terminated C string and `out` a valid pointer.
 */
enum PbdlStatus pbdl_model_from_json(const char *json, struct PbdlModel **out);

/**
 * Serialize a model to JSON. The returned string must be released with
 * [`pbdl_string_free`].
 *
 * # Safety
 * `model` must be a live handle and `out` a valid pointer.
 */
enum PbdlStatus pbdl_model_to_json(const struct PbdlModel *model, char **out);

/**
 * Input dimension of the model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uintptr_t pbdl_model_dim(const struct PbdlModel *model);

/**
 * Number of hyperplanes of the model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
uintptr_t pbdl_model_hyperplanes(const struct PbdlModel *model);

/**
 * Evaluate the convex generator at `x` (length `dim`).
 *
 * # Safety
 * `model` must be a live handle, `x` must point to `dim` doubles, and `value`
 * must be a valid pointer.
 */
enum PbdlStatus pbdl_model_evaluate(const struct PbdlModel *model,
                                    const double *x,
                                    uintptr_t dim,
                                    double *value);

/**
 * The learned divergence `D(x, y)` for two points of length `dim`.
 *
 * # Safety
 * `model` must be a live handle, `x` and `y` must point to `dim` doubles,
 * and `value` must be a valid pointer.
 */
enum PbdlStatus pbdl_model_divergence(const struct PbdlModel *model,
                                      const double *x,
                                      const double *y,
                                      uintptr_t dim,
                                      double *value);

/**
 * Learn a divergence from relative comparisons.
 *
 * `points` holds `n` rows of `dim` doubles in row-major order. `quads` holds
 * `m` quadruplets `(i, j, k, l)` of point indices, each asserting that point
 * `i` is closer to `j` than `k` is to `l`. On success writes a model handle
 * to `out`.
 *
 * # Safety
 * All pointers must be valid for the stated lengths.
 */
enum PbdlStatus pbdl_train(const double *points,
                           uintptr_t n,
                           uintptr_t dim,
                           const uintptr_t *quads,
                           uintptr_t m,
                           double margin,
                           double lambda,
                           struct PbdlModel **out);

/**
 * Release a model handle. Null is allowed.
 *
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void pbdl_model_free(struct PbdlModel *model);

/**
 * Release a string returned by this library. Null is allowed.
 *
 * # Safety
 * `s` must be null or a string returned by this library, not yet freed.
 */
void pbdl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PBDL_H */
