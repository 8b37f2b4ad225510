#ifndef NDRANK_H
#define NDRANK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
typedef enum NdStatus {
  ND_STATUS_OK = 0,
  ND_STATUS_NULL_POINTER = 1,
  ND_STATUS_INVALID_ARGUMENT = 2,
  ND_STATUS_PARSE = 3,
  ND_STATUS_SHAPE_MISMATCH = 4,
  ND_STATUS_TOO_LARGE = 5,
  /**
   * Cycles, undeclared labels and other malformed orders.
   */
  ND_STATUS_INVALID_ORDER = 6,
  /**
   * The input violates a hypothesis of the requested method.
   */
  ND_STATUS_UNSUPPORTED = 7,
  /**
   * Negative or non-positive data where it is not allowed.
   */
  ND_STATUS_INVALID_DATA = 8,
  ND_STATUS_IO = 9,
  ND_STATUS_INTERNAL = 10,
} NdStatus;

typedef struct NdFactorization NdFactorization;

typedef struct NdPoset NdPoset;

typedef struct NdTensor NdTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent failure on this thread, or NULL.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *ndrank_last_error_message(void);

/**
 * Creates the chain `0 < 1 < ... < n-1`.
 *
 * # Safety
 * `out` must point to writable storage for a handle.
 */
enum NdStatus ndrank_poset_chain(size_t n, struct NdPoset **out);

/**
 * Creates an antichain of `n` elements.
 *
 * # Safety
 * `out` must point to writable storage for a handle.
 */
enum NdStatus ndrank_poset_trivial(size_t n, struct NdPoset **out);

/**
 * Parses a poset from the text format (`elements: ...` followed by
 * `a < b` lines).
 *
 * # Safety
 * `text` must be a NUL-terminated string; `out` must be writable.
 */
enum NdStatus ndrank_poset_parse(const char *text, struct NdPoset **out);

/**
 * Number of elements, or 0 for a NULL handle.
 *
 * # Safety
 * `p` must be NULL or a live handle.
 */
size_t ndrank_poset_size(const struct NdPoset *p);

/**
 * # Safety
 * `p` must be NULL or a handle not yet freed.
 */
void ndrank_poset_free(struct NdPoset *p);

/**
 * Creates a tensor from a row-major buffer of `prod(shape)` values.
 *
 * # Safety
 * `shape` must hold `order` values and `data` must hold `len` values.
 */
enum NdStatus ndrank_tensor_new(const size_t *shape,
                                size_t order,
                                const double *data,
                                size_t len,
                                struct NdTensor **out);

/**
 * Number of entries, or 0 for a NULL handle.
 *
 * # Safety
 * `t` must be NULL or a live handle.
 */
size_t ndrank_tensor_len(const struct NdTensor *t);

/**
 * Copies the row-major entries into `buf`, which must hold `len` values
 * with `len` equal to [`ndrank_tensor_len`].
 *
 * # Safety
 * `t` must be a live handle and `buf` writable for `len` values.
 */
enum NdStatus ndrank_tensor_copy_data(const struct NdTensor *t, double *buf, size_t len);

/**
 * # Safety
 * `t` must be NULL or a handle not yet freed.
 */
void ndrank_tensor_free(struct NdTensor *t);

/**
 * Decides whether `t` has finite ND rank over the given mode posets.
 * A NaN `tol` selects the default tolerance. `out_violations` (optional)
 * receives the number of violated inequalities.
 *
 * # Safety
 * `posets` must hold `n_posets` live handles; outputs must be writable.
 */
enum NdStatus ndrank_check_finite_rank(const struct NdTensor *t,
                                       const struct NdPoset *const *posets,
                                       size_t n_posets,
                                       double tol,
                                       bool *out_member,
                                       size_t *out_violations);

/**
 * Weighted Euclidean projection of `y` onto the order cone of `poset`
 * (nonnegative nondecreasing vectors). `w` may be NULL for unit weights.
 *
 * # Safety
 * `y`, `out` (and `w` when non-NULL) must hold `len` values, with `len`
 * equal to the poset size.
 */
enum NdStatus ndrank_project(const struct NdPoset *poset,
                             const double *y,
                             const double *w,
                             size_t len,
                             double *out);

/**
 * Fits a rank-`rank` ND factorization by HALS with the given number of
 * restarts. `max_sweeps == 0` keeps the default.
 *
 * # Safety
 * `t` must be a live handle, `posets` must hold `n_posets` live handles and
 * `out` must be writable.
 */
enum NdStatus ndrank_hals(const struct NdTensor *t,
                          const struct NdPoset *const *posets,
                          size_t n_posets,
                          size_t rank,
                          size_t restarts,
                          uint64_t seed,
                          size_t max_sweeps,
                          struct NdFactorization **out);

/**
 * Number of terms, or 0 for a NULL handle.
 *
 * # Safety
 * `f` must be NULL or a live handle.
 */
size_t ndrank_factorization_rank(const struct NdFactorization *f);

/**
 * Residual sum of squares reported by the fit.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum NdStatus ndrank_factorization_rss(const struct NdFactorization *f, double *out);

/**
 * `‖T − reconstruction‖_F` against an arbitrary tensor of matching shape.
 *
 * # Safety
 * `f` and `t` must be live handles and `out` writable.
 */
enum NdStatus ndrank_factorization_residual(const struct NdFactorization *f,
                                            const struct NdTensor *t,
                                            double *out);

/**
 * Materializes the fitted tensor as a new handle.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum NdStatus ndrank_factorization_reconstruct(const struct NdFactorization *f,
                                               struct NdTensor **out);

/**
 * # Safety
 * `f` must be NULL or a handle not yet freed.
 */
void ndrank_factorization_free(struct NdFactorization *f);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NDRANK_H */
