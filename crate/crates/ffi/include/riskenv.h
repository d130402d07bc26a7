#ifndef RISKENV_H
#define RISKENV_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RiskenvStatus {
  RISKENV_STATUS_OK = 0,
  RISKENV_STATUS_NULL_POINTER = 1,
  RISKENV_STATUS_INVALID_UTF8 = 2,
  RISKENV_STATUS_INVALID_INPUT = 3,
  RISKENV_STATUS_NUMERIC = 4,
  RISKENV_STATUS_BUFFER_TOO_SMALL = 5,
  RISKENV_STATUS_PANIC = 6,
} RiskenvStatus;

/**
 * Opaque BSDE generator.
 */
typedef struct RiskenvGenerator RiskenvGenerator;

/**
 * Opaque risk measure.
 */
typedef struct RiskenvMeasure RiskenvMeasure;

/**
 * Opaque scenario tree.
 */
typedef struct RiskenvTree RiskenvTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread; do not free.
 */
const char *riskenv_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void riskenv_string_free(char *s);

/**
 * Binomial tree with `steps` steps over `horizon`.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum RiskenvStatus riskenv_tree_binomial(size_t steps, double horizon, struct RiskenvTree **out);

/**
 * Tree from its JSON document form.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum RiskenvStatus riskenv_tree_from_json(const char *json, struct RiskenvTree **out);

/**
 * # Safety
 * `tree` must come from a tree constructor and not have been freed. NULL is ignored.
 */
void riskenv_tree_free(struct RiskenvTree *tree);

/**
 * Number of leaves, or 0 for NULL.
 *
 * # Safety
 * `tree` must be NULL or a live handle.
 */
size_t riskenv_tree_leaf_count(const struct RiskenvTree *tree);

/**
 * Number of levels below the root, or 0 for NULL.
 *
 * # Safety
 * `tree` must be NULL or a live handle.
 */
size_t riskenv_tree_depth(const struct RiskenvTree *tree);

/**
 * Number of nodes at `level`, or 0 for NULL or an out-of-range level.
 *
 * # Safety
 * `tree` must be NULL or a live handle.
 */
size_t riskenv_tree_node_count(const struct RiskenvTree *tree, size_t level);

/**
 * Risk measure from its JSON spec, validated against `tree`.
 *
 * # Safety
 * `json` must be NUL-terminated, `tree` live and `out` valid.
 */
enum RiskenvStatus riskenv_measure_from_json(const char *json,
                                             const struct RiskenvTree *tree,
                                             struct RiskenvMeasure **out);

/**
 * # Safety
 * `m` must come from [`riskenv_measure_from_json`] and not have been freed. NULL is ignored.
 */
void riskenv_measure_free(struct RiskenvMeasure *m);

/**
 * Evaluates `rho_t(X)` for leaf values `x[0..len]`. Writes one value per
 * level-`t` node to `out` and the count to `written` (also on
 * `BUFFER_TOO_SMALL`, so callers can size the buffer).
 *
 * # Safety
 * Handles must be live; `x` must hold `len` values and `out` `out_len`.
 */
enum RiskenvStatus riskenv_measure_evaluate(const struct RiskenvMeasure *measure,
                                            const struct RiskenvTree *tree,
                                            const double *x,
                                            size_t len,
                                            size_t t,
                                            double *out,
                                            size_t out_len,
                                            size_t *written);

/**
 * `E[X | F_t]` under the reference measure.
 *
 * # Safety
 * As for [`riskenv_measure_evaluate`].
 */
enum RiskenvStatus riskenv_cond_expect(const struct RiskenvTree *tree,
                                       const double *x,
                                       size_t len,
                                       size_t t,
                                       double *out,
                                       size_t out_len,
                                       size_t *written);

/**
 * Generator from its JSON spec, e.g. `{"name": "abs", "kappa": 0.5}`.
 *
 * # Safety
 * `json` must be NUL-terminated and `out` valid.
 */
enum RiskenvStatus riskenv_generator_from_json(const char *json, struct RiskenvGenerator **out);

/**
 * # Safety
 * `g` must come from [`riskenv_generator_from_json`] and not have been freed. NULL is ignored.
 */
void riskenv_generator_free(struct RiskenvGenerator *g);

/**
 * g-risk `E_g[-xi | F_t]` on a binomial tree.
 *
 * # Safety
 * As for [`riskenv_measure_evaluate`].
 */
enum RiskenvStatus riskenv_g_risk(const struct RiskenvGenerator *generator,
                                  const struct RiskenvTree *tree,
                                  const double *xi,
                                  size_t len,
                                  size_t t,
                                  double *out,
                                  size_t out_len,
                                  size_t *written);

/**
 * Runs the axiom falsifier for A1..A6 and returns the report as JSON.
 *
 * # Safety
 * Handles must be live and `out_json` valid; free the result with
 * [`riskenv_string_free`].
 */
enum RiskenvStatus riskenv_check_axioms_json(const struct RiskenvMeasure *measure,
                                             const struct RiskenvTree *tree,
                                             size_t budget,
                                             uint64_t seed,
                                             char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISKENV_H */
