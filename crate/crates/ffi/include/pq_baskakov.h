#ifndef PQ_BASKAKOV_H
#define PQ_BASKAKOV_H

/* Generated with cbindgen:0.29.4 */

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum PqbbStatus {
  PQBB_STATUS_OK = 0,
  PQBB_STATUS_NULL_POINTER = -1,
  PQBB_STATUS_INVALID_PARAMETER = -2,
  PQBB_STATUS_DOMAIN = -3,
  /**
   * The result was written but a series did not meet its tolerance.
   */
  PQBB_STATUS_NOT_CONVERGED = -4,
  PQBB_STATUS_EVALUATION = -5,
  PQBB_STATUS_PANIC = -99,
} PqbbStatus;

/**
 * Opaque target function.
 */
typedef struct PqbbFunction PqbbFunction;

/**
 * Opaque parameter pair `(p, q)`.
 */
typedef struct PqbbPair PqbbPair;

/**
 * Series truncation settings.
 */
typedef struct PqbbPolicy {
  double rel_tol;
  double abs_tol;
  size_t max_terms;
} PqbbPolicy;

typedef struct PqbbQuadrature {
  double value;
  size_t terms_used;
  double tail_estimate;
  bool converged;
  size_t nodes_outside;
} PqbbQuadrature;

typedef struct PqbbOperatorResult {
  double value;
  size_t k_terms_used;
  double basis_tail_mass;
  bool inner_integrals_converged;
  bool trusted;
} PqbbOperatorResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *pqbb_version(void);

/**
 * The default truncation policy.
 */
struct PqbbPolicy pqbb_policy_default(void);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t pqbb_last_error_message(char *buf, size_t len);

/**
 * Creates a pair with `0 < q <= p <= 1`.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum PqbbStatus pqbb_pair_new(double p, double q, struct PqbbPair **out);

/**
 * # Safety
 * `pair` must be null or come from [`pqbb_pair_new`] and not be freed twice.
 */
void pqbb_pair_free(struct PqbbPair *pair);

/**
 * Polynomial with `len` coefficients in ascending degree.
 *
 * # Safety
 * `coeffs` must be valid for `len` reads and `out` for writes.
 */
enum PqbbStatus pqbb_function_polynomial(const double *coeffs,
                                         size_t len,
                                         struct PqbbFunction **out);

/**
 * Registered function by identifier (`e0`, `e1`, `e2`, `abs_shift`, `sin`,
 * `cos`, `exp_neg`, `sqrt`, `log1p`).
 *
 * # Safety
 * `id` must be a NUL-terminated string and `out` valid for writes.
 */
enum PqbbStatus pqbb_function_named(const char *id, struct PqbbFunction **out);

/**
 * # Safety
 * `f` must be null or come from a `pqbb_function_*` constructor.
 */
void pqbb_function_free(struct PqbbFunction *f);

/**
 * `[n]_{p,q}`.
 *
 * # Safety
 * `pair` must be a live handle and `out` valid for writes.
 */
enum PqbbStatus pqbb_pq_number(const struct PqbbPair *pair, uint32_t n, double *out);

/**
 * Closed-form `B_{p,q}(m, n)`.
 *
 * # Safety
 * `pair` must be a live handle and `out` valid for writes.
 */
enum PqbbStatus pqbb_pq_beta(const struct PqbbPair *pair, uint32_t m, uint32_t n, double *out);

/**
 * Jackson integral of `f` over `[0, a]`.
 *
 * # Safety
 * Handles must be live, `policy` null or valid, `out` valid for writes.
 */
enum PqbbStatus pqbb_jackson_integral(const struct PqbbPair *pair,
                                      const struct PqbbFunction *f,
                                      double a,
                                      const struct PqbbPolicy *policy,
                                      struct PqbbQuadrature *out);

/**
 * Improper integral of the Beta integrand `t^{m-1} / (1 ⊕ pt)^{m+n}`.
 *
 * # Safety
 * `pair` must be live, `policy` null or valid, `out` valid for writes.
 */
enum PqbbStatus pqbb_beta_integral(const struct PqbbPair *pair,
                                   uint32_t m,
                                   uint32_t n,
                                   const struct PqbbPolicy *policy,
                                   struct PqbbQuadrature *out);

/**
 * `D_n(f, x)` at `len` points; `out` receives one result per point.
 *
 * # Safety
 * Handles must be live, `xs` valid for `len` reads, `out` for `len` writes,
 * `policy` null or valid.
 */
enum PqbbStatus pqbb_baskakov_beta_grid(const struct PqbbPair *pair,
                                        const struct PqbbFunction *f,
                                        uint32_t n,
                                        const double *xs,
                                        size_t len,
                                        const struct PqbbPolicy *policy,
                                        struct PqbbOperatorResult *out);

/**
 * `D_n(f, x)` at one point.
 *
 * # Safety
 * As [`pqbb_baskakov_beta_grid`] with one point.
 */
enum PqbbStatus pqbb_baskakov_beta(const struct PqbbPair *pair,
                                   const struct PqbbFunction *f,
                                   uint32_t n,
                                   double x,
                                   const struct PqbbPolicy *policy,
                                   struct PqbbOperatorResult *out);

/**
 * Closed-form moment `D_n(t^m, x)` for `m <= 2`.
 *
 * # Safety
 * `pair` must be live and `out` valid for writes.
 */
enum PqbbStatus pqbb_moment(const struct PqbbPair *pair,
                            uint32_t m,
                            uint32_t n,
                            double x,
                            double *out);

/**
 * Central moment `D_n((t - x)^order, x)` for `order` 1 or 2.
 *
 * # Safety
 * `pair` must be live and `out` valid for writes.
 */
enum PqbbStatus pqbb_central_moment(const struct PqbbPair *pair,
                                    uint32_t order,
                                    uint32_t n,
                                    double x,
                                    double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PQ_BASKAKOV_H */
