#ifndef DEGRELAX_H
#define DEGRELAX_H

#pragma once

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum DwStatus {
  DW_STATUS_OK = 0,
  DW_STATUS_NULL_POINTER = 1,
  DW_STATUS_INVALID_ARGUMENT = 2,
  DW_STATUS_PARSE = 3,
  DW_STATUS_OUT_OF_DOMAIN = 4,
  DW_STATUS_NOT_IN_DOMAIN = 5,
  DW_STATUS_HYPOTHESIS_VIOLATED = 6,
  DW_STATUS_NUMERICAL_FAILURE = 7,
  DW_STATUS_PANIC = 8,
} DwStatus;

/**
 * Weight with its nondegenerate intervals and auxiliary weight.
 */
typedef struct DwAnalysis DwAnalysis;

/**
 * Candidate function.
 */
typedef struct DwFunction DwFunction;

/**
 * Weight function.
 */
typedef struct DwWeight DwWeight;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call on the same thread.
 */
const char *dw_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dw_version(void);

/**
 * Parses a weight document.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum DwStatus dw_weight_from_json(const char *json, struct DwWeight **out);

/**
 * # Safety
 * `w` must come from [`dw_weight_from_json`] or be null.
 */
void dw_weight_free(struct DwWeight *w);

/**
 * Parses a function document.
 *
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum DwStatus dw_function_from_json(const char *json, struct DwFunction **out);

/**
 * # Safety
 * `f` must come from [`dw_function_from_json`] or be null.
 */
void dw_function_free(struct DwFunction *f);

/**
 * Detects the nondegenerate intervals and builds the auxiliary weight.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_analysis_new(const struct DwWeight *w, double resolution, struct DwAnalysis **out);

/**
 * # Safety
 * `a` must come from [`dw_analysis_new`] or be null.
 */
void dw_analysis_free(struct DwAnalysis *a);

/**
 * Number of intervals and whether the list was truncated.
 *
 * # Safety
 * `a` must be a live handle; out pointers must be writable.
 */
enum DwStatus dw_analysis_interval_count(const struct DwAnalysis *a,
                                         size_t *count,
                                         bool *truncated);

/**
 * Endpoints of interval `index`.
 *
 * # Safety
 * `a` must be a live handle; out pointers must be writable.
 */
enum DwStatus dw_analysis_interval(const struct DwAnalysis *a,
                                   size_t index,
                                   double *lo,
                                   double *hi);

/**
 * Auxiliary weight at `x`.
 *
 * # Safety
 * `a` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_analysis_hat_value(const struct DwAnalysis *a, double x, double *out);

/**
 * Relaxed energy of `u`; `finite` is false when `u` lies outside the
 * finiteness domain, in which case `value` is left untouched.
 *
 * # Safety
 * Handles must be live; out pointers must be writable.
 */
enum DwStatus dw_relaxed_functional(const struct DwAnalysis *a,
                                    const struct DwFunction *u,
                                    size_t panels,
                                    bool *finite,
                                    double *value);

/**
 * Poincaré margin `Σ TV − Σ ⨍|u − u(mid)| ŵ` of `u`.
 *
 * # Safety
 * Handles must be live; `margin` must be writable.
 */
enum DwStatus dw_poincare_margin(const struct DwAnalysis *a,
                                 const struct DwFunction *u,
                                 size_t panels,
                                 double *margin);

/**
 * Total variation of the pairing measure on `(lo, hi)`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum DwStatus dw_pairing_total_variation(const struct DwWeight *w,
                                         const struct DwFunction *u,
                                         double lo,
                                         double hi,
                                         size_t panels,
                                         double *out);

/**
 * Empirical A₁ constant over the default ball family on the weight's domain.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum DwStatus dw_a1_constant(const struct DwWeight *w, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEGRELAX_H */
