#ifndef ALPHASPEC_H
#define ALPHASPEC_H

/* Generated by cbindgen from crates/ffi/src. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Pass as `nu` to solve the `nu = inf` problem.
 */
#define ALPHASPEC_NU_INFINITY INT64_MAX

typedef enum {
  ALPHASPEC_STATUS_OK = 0,
  ALPHASPEC_STATUS_INVALID_INPUT = 1,
  ALPHASPEC_STATUS_INFEASIBLE = 2,
  ALPHASPEC_STATUS_SOLVER_FAILURE = 3,
  ALPHASPEC_STATUS_NULL_POINTER = 4,
  ALPHASPEC_STATUS_BUFFER_TOO_SMALL = 5,
  ALPHASPEC_STATUS_PANIC = 6,
} AlphaspecStatus;

typedef enum {
  ALPHASPEC_DIVERGENCE_ALPHA = 0,
  ALPHASPEC_DIVERGENCE_KL = 1,
  ALPHASPEC_DIVERGENCE_KL0 = 2,
  ALPHASPEC_DIVERGENCE_HELLINGER = 3,
  ALPHASPEC_DIVERGENCE_PEARSON = 4,
  ALPHASPEC_DIVERGENCE_BETA = 5,
} AlphaspecDivergence;

/**
 * Opaque filter bank.
 */
typedef struct AlphaspecBank AlphaspecBank;

/**
 * Opaque solver instance: prior, normalized operator and settings.
 */
typedef struct AlphaspecProblem AlphaspecProblem;

/**
 * Opaque solver output.
 */
typedef struct AlphaspecResult AlphaspecResult;

typedef struct {
  bool in_range;
  bool positive_definite;
  double range_residual;
  double tolerance;
  double min_eigenvalue;
} AlphaspecFeasibility;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library from this thread.
 */
const char *alphaspec_last_error(void);

/**
 * Builds a bank from row-major `A` (`n * n` entries) and `B` (`n`).
 *
 * # Safety
 * `a` and `b` must point to `n * n` and `n` doubles; `out` must be valid
 * for writing.
 */
AlphaspecStatus alphaspec_bank_new(const double *a, const double *b, size_t n, AlphaspecBank **out);

/**
 * The lag bank of size `n`: pure delays.
 *
 * # Safety
 * `out` must be valid for writing.
 */
AlphaspecStatus alphaspec_bank_lag(size_t n, AlphaspecBank **out);

/**
 * # Safety
 * `bank` must come from `alphaspec_bank_new`/`alphaspec_bank_lag` (or be
 * null) and must not be used afterwards.
 */
void alphaspec_bank_free(AlphaspecBank *bank);

/**
 * State dimension `n`, or 0 for a null bank.
 *
 * # Safety
 * `bank` must be a live bank or null.
 */
size_t alphaspec_bank_dim(const AlphaspecBank *bank);

/**
 * Feasibility of a row-major `n x n` target `sigma`, relative tolerance
 * `tol` (the default when `tol <= 0`).
 *
 * # Safety
 * `bank` must be live, `sigma` must point to `n * n` doubles and `out`
 * must be valid for writing.
 */
AlphaspecStatus alphaspec_feasibility(const AlphaspecBank *bank,
                                      const double *sigma,
                                      double tol,
                                      AlphaspecFeasibility *out);

/**
 * Sets up a solver instance.
 *
 * `sigma` is row-major `n x n`, or null for the identity. `prior_json`
 * is a rational spectrum such as
 * `{"kind": "transfer", "num": [0, 1], "den": [-0.5, 1]}`. Zero (or
 * negative) `grid`, `tol` and `max_iter` select the defaults.
 *
 * # Safety
 * `bank` must be live, `sigma` null or pointing to `n * n` doubles,
 * `prior_json` a NUL-terminated string and `out` valid for writing.
 */
AlphaspecStatus alphaspec_problem_new(const AlphaspecBank *bank,
                                      const double *sigma,
                                      const char *prior_json,
                                      size_t grid,
                                      double tol,
                                      size_t max_iter,
                                      AlphaspecProblem **out);

/**
 * # Safety
 * `problem` must come from `alphaspec_problem_new` (or be null) and must
 * not be used afterwards.
 */
void alphaspec_problem_free(AlphaspecProblem *problem);

/**
 * Number of grid nodes, or 0 for a null problem.
 *
 * # Safety
 * `problem` must be live or null.
 */
size_t alphaspec_problem_grid_size(const AlphaspecProblem *problem);

/**
 * Solves for one `nu` (a positive integer or `ALPHASPEC_NU_INFINITY`).
 *
 * # Safety
 * `problem` must be live and `out` valid for writing.
 */
AlphaspecStatus alphaspec_solve(const AlphaspecProblem *problem, int64_t nu, AlphaspecResult **out);

/**
 * # Safety
 * `result` must come from `alphaspec_solve` (or be null) and must not be
 * used afterwards.
 */
void alphaspec_result_free(AlphaspecResult *result);

/**
 * # Safety
 * `result` must be live or null.
 */
size_t alphaspec_result_iterations(const AlphaspecResult *result);

/**
 * # Safety
 * `result` must be live or null (NaN is returned for null).
 */
double alphaspec_result_dual_value(const AlphaspecResult *result);

/**
 * # Safety
 * `result` must be live or null (NaN is returned for null).
 */
double alphaspec_result_primal_value(const AlphaspecResult *result);

/**
 * # Safety
 * `result` must be live or null (NaN is returned for null).
 */
double alphaspec_result_constraint_residual(const AlphaspecResult *result);

/**
 * # Safety
 * `result` must be live or null.
 */
size_t alphaspec_result_grid_size(const AlphaspecResult *result);

/**
 * Copies the optimal spectrum (one value per grid node) into `out`.
 *
 * # Safety
 * `result` must be live and `out` must have room for `len` doubles.
 */
AlphaspecStatus alphaspec_result_copy_phi(const AlphaspecResult *result, double *out, size_t len);

/**
 * Copies the grid nodes `theta_k = 2 pi k / size` into `out`.
 *
 * # Safety
 * `result` must be live and `out` must have room for `len` doubles.
 */
AlphaspecStatus alphaspec_result_copy_theta(const AlphaspecResult *result, double *out, size_t len);

/**
 * Copies the optimal multiplier of the normalized problem, row-major
 * `n x n`, into `out`.
 *
 * # Safety
 * `result` must be live and `out` must have room for `len` doubles.
 */
AlphaspecStatus alphaspec_result_copy_lambda(const AlphaspecResult *result,
                                             double *out,
                                             size_t len);

/**
 * Divergence between two spectra sampled on the same uniform grid of
 * `len` nodes. `parameter` is used by the alpha and beta families only.
 *
 * # Safety
 * `phi1` and `phi2` must point to `len` doubles and `out` must be valid
 * for writing.
 */
AlphaspecStatus alphaspec_divergence(const double *phi1,
                                     const double *phi2,
                                     size_t len,
                                     AlphaspecDivergence family,
                                     double parameter,
                                     double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ALPHASPEC_H */
