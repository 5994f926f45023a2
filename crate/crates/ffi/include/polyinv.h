#ifndef POLYINV_H
#define POLYINV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum PolyinvStatus {
  POLYINV_STATUS_OK = 0,
  POLYINV_STATUS_NULL_POINTER = 1,
  POLYINV_STATUS_INVALID_ARGUMENT = 2,
  // Rank deficiency, non-finite design entries, or every trial failing.
  POLYINV_STATUS_SOLVER_FAILURE = 3,
  // The invariance condition does not hold, or holds when a search needs it not to.
  POLYINV_STATUS_CONDITION_NOT_MET = 4,
  POLYINV_STATUS_INDEX_OUT_OF_RANGE = 5,
  // A Rust panic was caught at the boundary.
  POLYINV_STATUS_INTERNAL = 6,
} PolyinvStatus;

typedef enum PolyinvPenaltyFamily {
  POLYINV_PENALTY_FAMILY_NONE = 0,
  POLYINV_PENALTY_FAMILY_RIDGE = 1,
  POLYINV_PENALTY_FAMILY_LASSO = 2,
} PolyinvPenaltyFamily;

typedef struct PolyinvFit PolyinvFit;

// Set of monomials of a fixed arity.
typedef struct PolyinvIndexSet PolyinvIndexSet;

typedef struct PolyinvPolynomial PolyinvPolynomial;

// Outcome of the static penalty audit. Counts refer to the lists in the JSON form.
typedef struct PolyinvAudit {
  bool downward_closed;
  bool penalized_subset_of_greatest;
  bool compliant;
  size_t missing_divisor_count;
  size_t offending_penalized_count;
} PolyinvAudit;

typedef struct PolyinvFitSummary {
  double ssr;
  double loss;
  size_t iterations;
  bool converged;
  bool ill_conditioned;
} PolyinvFitSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL after a success.
// Valid until the next call into this library from the same thread.
const char *polyinv_last_error(void);

// Library version as a static NUL-terminated string.
const char *polyinv_version(void);

// Frees a string returned by this library. NULL is ignored.
//
// # Safety
// `s` must come from a `*_json` function of this library and not be freed twice.
void polyinv_string_free(char *s);

// Builds an index set from `count` monomials. Duplicates collapse.
//
// # Safety
// `exponents` must hold `count * arity` values; `out` must be writable.
enum PolyinvStatus polyinv_index_set_new(size_t arity,
                                         const uint32_t *exponents,
                                         size_t count,
                                         struct PolyinvIndexSet **out);

// # Safety
// `set` must be NULL or a handle from this library not yet freed.
void polyinv_index_set_free(struct PolyinvIndexSet *set);

// # Safety
// `set` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_index_set_len(const struct PolyinvIndexSet *set, size_t *out);

// # Safety
// `set` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_index_set_arity(const struct PolyinvIndexSet *set, size_t *out);

// Copies the exponents of the `index`-th member, in canonical graded order.
//
// # Safety
// `set` must be a live handle; `out_exponents` must have room for `arity` values.
enum PolyinvStatus polyinv_index_set_get(const struct PolyinvIndexSet *set,
                                         size_t index,
                                         uint32_t *out_exponents);

// Maximal elements under componentwise order.
//
// # Safety
// `set` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_greatest_monomials(const struct PolyinvIndexSet *set,
                                              struct PolyinvIndexSet **out);

// # Safety
// `set` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_downward_closure(const struct PolyinvIndexSet *set,
                                            struct PolyinvIndexSet **out);

// # Safety
// `set` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_is_downward_closed(const struct PolyinvIndexSet *set, bool *out);

// Checks whether penalizing `penalized` on `model` keeps fits translation invariant.
//
// # Safety
// Both handles must be live; `out` must be writable.
enum PolyinvStatus polyinv_audit_penalty(const struct PolyinvIndexSet *model,
                                         const struct PolyinvIndexSet *penalized,
                                         struct PolyinvAudit *out);

// Polynomial with `count` terms; repeated monomials are summed.
//
// # Safety
// `exponents` must hold `count * arity` values and `coefficients` `count` values.
enum PolyinvStatus polyinv_polynomial_new(size_t arity,
                                          const uint32_t *exponents,
                                          const double *coefficients,
                                          size_t count,
                                          struct PolyinvPolynomial **out);

// # Safety
// `poly` must be NULL or a handle from this library not yet freed.
void polyinv_polynomial_free(struct PolyinvPolynomial *poly);

// # Safety
// `poly` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_polynomial_num_terms(const struct PolyinvPolynomial *poly, size_t *out);

// Copies the `index`-th stored term in canonical graded order.
//
// # Safety
// `poly` must be a live handle; `out_exponents` must have room for `arity`
// values and `out_coefficient` must be writable.
enum PolyinvStatus polyinv_polynomial_term(const struct PolyinvPolynomial *poly,
                                           size_t index,
                                           uint32_t *out_exponents,
                                           double *out_coefficient);

// # Safety
// `poly` must be a live handle; `x` must hold `len` values; `out` must be writable.
enum PolyinvStatus polyinv_polynomial_evaluate(const struct PolyinvPolynomial *poly,
                                               const double *x,
                                               size_t len,
                                               double *out);

// Re-expansion `g(x) = f(x + shift)`.
//
// # Safety
// `poly` must be a live handle; `shift` must hold `len` values; `out` must be writable.
enum PolyinvStatus polyinv_polynomial_translate(const struct PolyinvPolynomial *poly,
                                                const double *shift,
                                                size_t len,
                                                struct PolyinvPolynomial **out);

// JSON text `{"arity":..,"terms":[{"exp":[..],"coef":..}]}`; free with `polyinv_string_free`.
//
// # Safety
// `poly` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_polynomial_to_json(const struct PolyinvPolynomial *poly, char **out);

// Fits `model` to `n` rows of `p` predictors (`x` row-major) under the given penalty.
// `family` is a `PolyinvPenaltyFamily` value. `penalty_exponents` and
// `penalty_lambdas` describe `penalty_count` weighted monomials and must be
// empty for `POLYINV_PENALTY_FAMILY_NONE`.
//
// # Safety
// `x` must hold `n * p` values, `y` `n` values, `penalty_exponents`
// `penalty_count * p` values and `penalty_lambdas` `penalty_count` values.
enum PolyinvStatus polyinv_fit(const double *x,
                               const double *y,
                               size_t n,
                               size_t p,
                               const struct PolyinvIndexSet *model,
                               uint32_t family,
                               const uint32_t *penalty_exponents,
                               const double *penalty_lambdas,
                               size_t penalty_count,
                               struct PolyinvFit **out);

// # Safety
// `fit` must be NULL or a handle from this library not yet freed.
void polyinv_fit_free(struct PolyinvFit *fit);

// # Safety
// `fit` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_fit_summary(const struct PolyinvFit *fit, struct PolyinvFitSummary *out);

// Copy of the fitted polynomial as a new handle.
//
// # Safety
// `fit` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_fit_model(const struct PolyinvFit *fit, struct PolyinvPolynomial **out);

// # Safety
// `fit` must be a live handle; `out` must be writable.
enum PolyinvStatus polyinv_fit_to_json(const struct PolyinvFit *fit, char **out);

// Runs the randomized invariance check on a JSON trial configuration
// (the format read by `polyinv check`) and returns the report as JSON.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum PolyinvStatus polyinv_check_invariance_json(const char *config_json, char **out);

// Counterexample search on a non-compliant JSON trial configuration.
//
// # Safety
// `config_json` must be a NUL-terminated string; `out` must be writable.
enum PolyinvStatus polyinv_search_counterexample_json(const char *config_json, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* POLYINV_H */
