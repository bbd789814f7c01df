#ifndef AVG_ORBIT_H
#define AVG_ORBIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stdint.h>

typedef enum AvgChart {
  AVG_CHART_ORIGINAL = 0,
  AVG_CHART_RESCALED = 1,
  AVG_CHART_STANDARD_FORM = 2,
} AvgChart;

typedef enum AvgClassification {
  AVG_CLASSIFICATION_ATTRACTOR_NODE = 0,
  AVG_CLASSIFICATION_ATTRACTOR_FOCUS = 1,
  AVG_CLASSIFICATION_CENTER = 2,
} AvgClassification;

typedef enum AvgStatus {
  AVG_STATUS_OK = 0,
  AVG_STATUS_NULL_POINTER = 1,
  AVG_STATUS_INVALID_UTF8 = 2,
  AVG_STATUS_INVALID_ARGUMENT = 3,
  AVG_STATUS_CONFIG = 4,
  AVG_STATUS_PARSE = 5,
  AVG_STATUS_EVALUATION = 6,
  AVG_STATUS_NUMERICAL = 7,
  /**
   * Averaging did not establish a periodic orbit.
   */
  AVG_STATUS_EXISTENCE_NOT_ESTABLISHED = 8,
  /**
   * Shooting failed to converge.
   */
  AVG_STATUS_VERIFICATION_FAILED = 9,
  AVG_STATUS_PANIC = 10,
} AvgStatus;

/**
 * Opaque expression handle.
 */
typedef struct AvgExpr AvgExpr;

/**
 * Opaque problem handle.
 */
typedef struct AvgProblem AvgProblem;

/**
 * Averaged system and existence verdict.
 */
typedef struct AvgAnalysis {
  /**
   * Row-major.
   */
  double m[4];
  double v[2];
  double period;
  double det_m;
  double v_norm;
  /**
   * Valid when `has_z0` is set.
   */
  double z0[2];
  bool has_z0;
  bool conditions_hold;
  bool det_nonzero;
  bool v_nonzero;
  bool f_vanishes_at_origin;
  bool coefficients_periodic;
} AvgAnalysis;

typedef struct AvgComplex {
  double re;
  double im;
} AvgComplex;

/**
 * A periodic orbit found by shooting.
 */
typedef struct AvgOrbit {
  double epsilon;
  double period;
  double x0_rescaled[2];
  double x0_original[2];
  double residual;
  uint32_t iterations;
  /**
   * Row-major.
   */
  double monodromy[4];
  struct AvgComplex floquet[2];
  bool attracting;
} AvgOrbit;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or null if none. Valid until
 * the next failing call on the same thread.
 */
const char *avg_last_error_message(void);

/**
 * Library version; the pointer is static.
 */
const char *avg_version(void);

/**
 * Builds a problem from a JSON config.
 *
 * # Safety
 *
 * `json` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AvgStatus avg_problem_from_json(const char *json, struct AvgProblem **out);

/**
 * Releases a problem. Null is ignored.
 *
 * # Safety
 *
 * `problem` must come from [`avg_problem_from_json`] and not be used again.
 */
void avg_problem_free(struct AvgProblem *problem);

/**
 * Computes the averaged system and checks the existence conditions.
 * Returns `Ok` even when the conditions fail; see `conditions_hold`.
 *
 * # Safety
 *
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum AvgStatus avg_problem_analyze(const struct AvgProblem *problem, struct AvgAnalysis *out);

/**
 * Shoots for the periodic orbit in `chart`, seeded by the averaging
 * prediction.
 *
 * # Safety
 *
 * `problem` must be a live handle and `out` a valid pointer.
 */
enum AvgStatus avg_problem_find_orbit(const struct AvgProblem *problem,
                                      enum AvgChart chart,
                                      struct AvgOrbit *out);

/**
 * Eigenvalues of the linearization `θ̈ = -aθ - bθ̇`, written to `out[0..2]`.
 *
 * # Safety
 *
 * `out` must point to two writable `AvgComplex`.
 */
enum AvgStatus avg_eigenvalues(double a, double b, struct AvgComplex *out);

/**
 * Type of the equilibrium at the origin.
 *
 * # Safety
 *
 * `out` must be a valid pointer.
 */
enum AvgStatus avg_classify(double a, double b, enum AvgClassification *out);

/**
 * `det M` for constant coefficients `f1 ≡ c1`, `f2 ≡ c2`.
 *
 * # Safety
 *
 * `out` must be a valid pointer.
 */
enum AvgStatus avg_corollary_det(double c1, double c2, double a, double b_bar, double *out);

/**
 * `e^{At}` for `A = [[0, 1], [-a, 0]]`, row-major into `out[0..4]`.
 *
 * # Safety
 *
 * `out` must point to four writable doubles.
 */
enum AvgStatus avg_fundamental_matrix(double t, double a, double *out);

/**
 * Parses a perturbation expression in `t`, `theta`, `thetadot`.
 *
 * # Safety
 *
 * `src` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AvgStatus avg_expr_parse(const char *src, struct AvgExpr **out);

/**
 * Evaluates an expression. Domain faults return `Evaluation`.
 *
 * # Safety
 *
 * `expr` must be a live handle and `out` a valid pointer.
 */
enum AvgStatus avg_expr_eval(const struct AvgExpr *expr,
                             double t,
                             double theta,
                             double thetadot,
                             double *out);

/**
 * Fully parenthesized form of `expr`, owned by the handle.
 *
 * # Safety
 *
 * `expr` must be a live handle; the result lives as long as it does.
 */
const char *avg_expr_canonical(const struct AvgExpr *expr);

/**
 * Releases an expression. Null is ignored.
 *
 * # Safety
 *
 * `expr` must come from [`avg_expr_parse`] and not be used again.
 */
void avg_expr_free(struct AvgExpr *expr);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVG_ORBIT_H */
