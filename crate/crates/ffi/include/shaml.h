#ifndef SHAML_H
#define SHAML_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ShamlStatus {
  SHAML_STATUS_OK = 0,
  SHAML_STATUS_NULL_POINTER = 1,
  SHAML_STATUS_INVALID_ARGUMENT = 2,
  SHAML_STATUS_IO = 3,
  SHAML_STATUS_PARSE = 4,
  SHAML_STATUS_VALIDATION = 5,
  SHAML_STATUS_NUMERIC = 6,
  SHAML_STATUS_BUFFER_TOO_SMALL = 7,
  SHAML_STATUS_PANIC = 8,
} ShamlStatus;

typedef enum ShamlTask {
  /**
   * Classify trivial (|Sha| = 1) against non-trivial.
   */
  SHAML_TASK_CLASSIFY = 0,
  /**
   * Regress sqrt|Sha|.
   */
  SHAML_TASK_REGRESS = 1,
} ShamlTask;

/**
 * Opaque dataset handle.
 */
typedef struct ShamlDataset ShamlDataset;

/**
 * Opaque trained-model handle.
 */
typedef struct ShamlModel ShamlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next `shaml_*` call on the same thread.
 */
const char *shaml_last_error(void);

/**
 * Load a curve CSV, dropping rows whose BSD residual exceeds `tol`.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum ShamlStatus shaml_dataset_load_csv(const char *path, double tol, struct ShamlDataset **out);

/**
 * Number of curves; 0 for a null handle.
 *
 * # Safety
 * `ds` must be null or a live handle from [`shaml_dataset_load_csv`].
 */
size_t shaml_dataset_len(const struct ShamlDataset *ds);

/**
 * # Safety
 * `ds` must be null or a handle not yet freed.
 */
void shaml_dataset_free(struct ShamlDataset *ds);

/**
 * Unrounded |Sha| from the BSD formula.
 *
 * # Safety
 * `out` must be writable.
 */
enum ShamlStatus shaml_compute_sha(uint32_t torsion,
                                   double special_value,
                                   double real_period,
                                   double regulator,
                                   uint64_t tamagawa,
                                   double *out);

/**
 * Round a sqrt|Sha| prediction to an integer >= 1.
 *
 * # Safety
 * `out` must be writable.
 */
enum ShamlStatus shaml_round_sqrt_sha(double prediction, uint64_t *out);

/**
 * Binary MCC of two 0/1 label arrays of length `n`.
 *
 * # Safety
 * `pred` and `truth` must point to `n` readable bytes; `out` must be writable.
 */
enum ShamlStatus shaml_mcc(const uint8_t *pred, const uint8_t *truth, size_t n, double *out);

/**
 * Fit a boosted-tree model on the five BSD features with default settings.
 *
 * # Safety
 * `ds` must be a live dataset handle; `out` must be writable.
 */
enum ShamlStatus shaml_gbm_fit(const struct ShamlDataset *ds,
                               enum ShamlTask task,
                               bool log_features,
                               uint64_t seed,
                               struct ShamlModel **out);

/**
 * Predict every curve of `ds` into `out[0..len)`. `len` must equal the
 * dataset length. Classifiers yield the class index (1 = trivial),
 * regressors the raw sqrt|Sha| estimate.
 *
 * # Safety
 * Handles must be live; `out` must point to `len` writable doubles.
 */
enum ShamlStatus shaml_model_predict(const struct ShamlModel *model,
                                     const struct ShamlDataset *ds,
                                     double *out,
                                     size_t len);

/**
 * Serialize a model to JSON. Release the string with [`shaml_string_free`].
 *
 * # Safety
 * `model` must be live; `out` must be writable.
 */
enum ShamlStatus shaml_model_to_json(const struct ShamlModel *model, char **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum ShamlStatus shaml_model_from_json(const char *json, struct ShamlModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void shaml_model_free(struct ShamlModel *model);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void shaml_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SHAML_H */
