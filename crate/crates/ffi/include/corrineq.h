#ifndef CORRINEQ_H
#define CORRINEQ_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of a call.
 */
typedef enum {
  CI_STATUS_OK = 0,
  CI_STATUS_NULL_POINTER = 1,
  CI_STATUS_INVALID_UTF8 = 2,
  CI_STATUS_PARSE_ERROR = 3,
  CI_STATUS_DERIVE_ERROR = 4,
  CI_STATUS_COMPUTE_ERROR = 5,
  CI_STATUS_INVALID_ARGUMENT = 6,
  CI_STATUS_PANIC = 7,
} CiStatus;

/**
 * Parsed sum-of-squares expression.
 */
typedef struct CiExpression CiExpression;

/**
 * Correlation inequality derived from an expression.
 */
typedef struct CiInequality CiInequality;

/**
 * Parsed measurement scenario.
 */
typedef struct CiScenario CiScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library from the same thread.
 */
const char *ci_last_error(void);

/**
 * Releases a string returned by the library. Null is ignored.
 */
void ci_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *ci_version(void);

/**
 * Parses a sum-of-squares expression such as `(X1 - Y1 - Y2)^2 + (X2 - Y1 + Y2)^2 >= 2`.
 */
CiStatus ci_expression_parse(const char *source, CiExpression **out_expr);

void ci_expression_free(CiExpression *expr);

/**
 * Canonical text of an expression.
 */
CiStatus ci_expression_format(const CiExpression *expr, char **out_text);

/**
 * Parses a scenario description.
 */
CiStatus ci_scenario_parse(const char *source, CiScenario **out_scenario);

void ci_scenario_free(CiScenario *scenario);

/**
 * Number of variables and of measurement contexts in a scenario.
 */
CiStatus ci_scenario_size(const CiScenario *scenario, size_t *out_variables, size_t *out_contexts);

/**
 * Expands the squares of `expr` into a correlation inequality.
 */
CiStatus ci_inequality_derive(const CiExpression *expr, CiInequality **out_ineq);

void ci_inequality_free(CiInequality *ineq);

/**
 * The inequality as text, e.g. `<X1Y1> + <X1Y2> + <X2Y1> - <X2Y2> <= 2`.
 */
CiStatus ci_inequality_format(const CiInequality *ineq, char **out_text);

/**
 * Bound and direction: `*out_upper` is 1 for `<=` and 0 for `>=`.
 */
CiStatus ci_inequality_bound(const CiInequality *ineq, double *out_bound, int32_t *out_upper);

CiStatus ci_inequality_term_count(const CiInequality *ineq, size_t *out_count);

/**
 * Smallest and largest value of the left-hand side over ±1 assignments.
 */
CiStatus ci_inequality_classical_range(const CiInequality *ineq,
                                       int64_t *out_min,
                                       int64_t *out_max);

/**
 * Full derivation (terms, groups, warnings) as JSON.
 */
CiStatus ci_inequality_json(const CiInequality *ineq, char **out_json);

/**
 * Hybrid `F` for coplanar settings (angles in the x-z plane, radians).
 * `state` is 0 for the singlet, 1 for the product state with both qubits
 * along the Y2 direction.
 */
CiStatus ci_hybrid_f(int32_t state, double x1, double x2, double y1, double y2, double *out_value);

/**
 * Largest singlet `F` over settings with the given two relative angles.
 */
CiStatus ci_tsirelson_envelope(double theta1, double theta2, double *out_value);

/**
 * Derive report as JSON. `scenario` may be null.
 */
CiStatus ci_derive_json(const char *expression, const char *scenario, char **out_json);

/**
 * Bound report (classical and no-disturbance optima) as JSON. `scenario`
 * may be null.
 */
CiStatus ci_bound_json(const char *expression, const char *scenario, char **out_json);

/**
 * Joint-distribution test of observed correlators. `*out_feasible` is 1
 * when a joint distribution exists within `tolerance`. `inequality` may be
 * null.
 */
CiStatus ci_check_json(const char *scenario,
                       const char *observations,
                       const char *inequality,
                       double tolerance,
                       int32_t *out_feasible,
                       char **out_json);

/**
 * Runs a reproduction target by name (`all` runs every one). `*out_pass`
 * is 1 when every check passed.
 */
CiStatus ci_reproduce_json(const char *target,
                           uint64_t shots,
                           uint64_t seed,
                           int32_t *out_pass,
                           char **out_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CORRINEQ_H */
