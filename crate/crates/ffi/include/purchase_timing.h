#ifndef PURCHASE_TIMING_H
#define PURCHASE_TIMING_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PtPayoff {
  PT_PAYOFF_CALL = 0,
  PT_PAYOFF_PUT = 1,
  PT_PAYOFF_DIGITAL_CALL = 2,
} PtPayoff;

typedef enum PtSide {
  PT_SIDE_MARKET = 0,
  PT_SIDE_BUYER = 1,
} PtSide;

typedef enum PtStatus {
  PT_STATUS_OK = 0,
  PT_STATUS_NULL_POINTER = 1,
  PT_STATUS_INVALID_ARGUMENT = 2,
  PT_STATUS_CONFIG = 3,
  PT_STATUS_UNKNOWN_SCENARIO = 4,
  PT_STATUS_SOLVER = 5,
  PT_STATUS_IO = 6,
  PT_STATUS_PANIC = 7,
} PtStatus;

/**
 * Opaque perpetual put pair with its purchase threshold.
 */
typedef struct PtPerpetual PtPerpetual;

/**
 * Opaque result of a scenario run.
 */
typedef struct PtRun PtRun;

/**
 * Closed-form perpetual put quantities.
 */
typedef struct PtPerpetualThresholds {
  /**
   * Market exercise threshold.
   */
  double b_star;
  /**
   * Buyer exercise threshold.
   */
  double b_tilde_star;
  /**
   * Purchase threshold.
   */
  double s_star;
  /**
   * Slope of the timing value below `s_star`.
   */
  double a;
  /**
   * Timing value as `s -> infinity`.
   */
  double limit;
} PtPerpetualThresholds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Valid until the next
 * call into this library on the same thread.
 */
const char *pt_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *pt_version(void);

/**
 * Build the perpetual put pair for constant intensities
 * `lambda_market < lambda_buyer`.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum PtStatus pt_perpetual_new(double r,
                               double sigma,
                               double strike,
                               double lambda_market,
                               double lambda_buyer,
                               struct PtPerpetual **out);

/**
 * # Safety
 * `handle` must come from [`pt_perpetual_new`] and not be used afterwards.
 */
void pt_perpetual_free(struct PtPerpetual *handle);

/**
 * # Safety
 * `handle` must be live; `out` must be writable.
 */
enum PtStatus pt_perpetual_thresholds(const struct PtPerpetual *handle,
                                      struct PtPerpetualThresholds *out);

/**
 * Perpetual put price of one side at spot `s`.
 *
 * # Safety
 * `handle` must be live; `out` must be writable.
 */
enum PtStatus pt_perpetual_price(const struct PtPerpetual *handle,
                                 enum PtSide which,
                                 double s,
                                 double *out);

/**
 * Value of optimally timing the purchase at spot `s`.
 *
 * # Safety
 * `handle` must be live; `out` must be writable.
 */
enum PtStatus pt_perpetual_timing_value(const struct PtPerpetual *handle, double s, double *out);

/**
 * Closed-form European price at `(t, s)` under a constant default
 * intensity `lambda`.
 *
 * # Safety
 * `out` must be writable.
 */
enum PtStatus pt_closed_form_price(double r,
                                   double sigma,
                                   double lambda,
                                   double maturity,
                                   enum PtPayoff payoff,
                                   double strike,
                                   double t,
                                   double s,
                                   double *out);

/**
 * Run a JSON scenario document and write its outputs. `out_dir` may be
 * null to use the environment or the document's directory.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string; `out_dir` null or
 * NUL-terminated; `out` writable.
 */
enum PtStatus pt_run_config(const char *config_json, const char *out_dir, struct PtRun **out);

/**
 * Summary document of a run, owned by the handle.
 *
 * # Safety
 * `handle` must be live or null.
 */
const char *pt_run_summary(const struct PtRun *handle);

/**
 * Directory the run wrote into, owned by the handle.
 *
 * # Safety
 * `handle` must be live or null.
 */
const char *pt_run_output_dir(const struct PtRun *handle);

/**
 * # Safety
 * `handle` must come from [`pt_run_config`] and not be used afterwards.
 */
void pt_run_free(struct PtRun *handle);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* PURCHASE_TIMING_H */
