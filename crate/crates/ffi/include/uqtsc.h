#ifndef UQTSC_H
#define UQTSC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum UqtscStatus {
  UQTSC_STATUS_OK = 0,
  UQTSC_STATUS_NULL_POINTER = 1,
  UQTSC_STATUS_INVALID_ARGUMENT = 2,
  UQTSC_STATUS_IO = 3,
  UQTSC_STATUS_CHECKPOINT = 4,
  UQTSC_STATUS_SHAPE_MISMATCH = 5,
  UQTSC_STATUS_PANIC = 6,
} UqtscStatus;

/**
 * A loaded checkpoint. Create with `uqtsc_model_load`, release with
 * `uqtsc_model_free`.
 */
typedef struct UqtscModel UqtscModel;

typedef struct UqtscScores {
  double f1_cl0;
  double f1_cl1;
  double weighted_f1;
  double accuracy;
} UqtscScores;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *uqtsc_version(void);

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *uqtsc_last_error(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable pointer.
 */
enum UqtscStatus uqtsc_model_load(const char *path, struct UqtscModel **out);

/**
 * # Safety
 * `model` must come from `uqtsc_model_load` and not be used afterwards.
 * Null is ignored.
 */
void uqtsc_model_free(struct UqtscModel *model);

/**
 * # Safety
 * `model` must be a live handle; `channels` and `length` writable.
 */
enum UqtscStatus uqtsc_model_input_shape(const struct UqtscModel *model,
                                         size_t *channels,
                                         size_t *length);

/**
 * Monte Carlo predictive posterior over `samples` stochastic passes.
 * `x` holds `batch * channels * length` values in `[batch][channel][time]`
 * order. Writes `batch * 2` mean probabilities and, when `entropy_out` is
 * not null, `batch` predictive entropies.
 *
 * # Safety
 * `model` must be a live handle and every pointer must cover the lengths
 * above.
 */
enum UqtscStatus uqtsc_model_predict(const struct UqtscModel *model,
                                     const double *x,
                                     size_t batch,
                                     size_t samples,
                                     uint64_t seed,
                                     double *mean_out,
                                     double *entropy_out);

/**
 * Natural-log entropy of a probability vector of length `n`.
 *
 * # Safety
 * `probs` must hold `n` values and `out` be writable.
 */
enum UqtscStatus uqtsc_entropy(const double *probs, size_t n, double *out);

/**
 * Expected calibration error over `n` binary predictions. `probs` holds
 * `n * 2` class probabilities. Confidence binning unless `positive_class`.
 *
 * # Safety
 * `probs` must hold `2n` values, `labels` `n` values, and `out` be writable.
 */
enum UqtscStatus uqtsc_ece(const double *probs,
                           const uint8_t *labels,
                           size_t n,
                           size_t bins,
                           bool positive_class,
                           double *out);

/**
 * # Safety
 * `preds` and `labels` must hold `n` values and `out` be writable.
 */
enum UqtscStatus uqtsc_f1(const uint8_t *preds,
                          const uint8_t *labels,
                          size_t n,
                          struct UqtscScores *out);

/**
 * True when both class F1 scores reach 0.9 and mean entropy is at most 0.1.
 */
bool uqtsc_select(double f1_cl0, double f1_cl1, double mean_entropy);

/**
 * Number of full windows of length `window` at stride `step`.
 *
 * # Safety
 * `out` must be writable.
 */
enum UqtscStatus uqtsc_window_count(size_t len, size_t window, size_t step, size_t *out);

/**
 * Epochs charged by `iterations` Hyperband iterations.
 *
 * # Safety
 * `out` must be writable.
 */
enum UqtscStatus uqtsc_hyperband_total_epochs(size_t min_budget,
                                              size_t max_budget,
                                              size_t eta,
                                              size_t iterations,
                                              bool single_bracket,
                                              size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* UQTSC_H */
