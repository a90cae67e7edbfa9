#ifndef HEQ_H
#define HEQ_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HeqStatus {
  HEQ_STATUS_OK = 0,
  HEQ_STATUS_NULL_POINTER = 1,
  HEQ_STATUS_INVALID_UTF8 = 2,
  HEQ_STATUS_PARSE_ERROR = 3,
  HEQ_STATUS_INVALID_ARGUMENT = 4,
  HEQ_STATUS_SOLVER_ERROR = 5,
  HEQ_STATUS_ORACLE_ERROR = 6,
  HEQ_STATUS_BUFFER_TOO_SMALL = 7,
  HEQ_STATUS_NOT_AVAILABLE = 8,
  HEQ_STATUS_PANIC = 9,
} HeqStatus;

/**
 * Schedule validation outcome.
 */
typedef enum HeqOutcome {
  HEQ_OUTCOME_PASS = 0,
  HEQ_OUTCOME_FAIL = 1,
  HEQ_OUTCOME_INCONSISTENT = 2,
} HeqOutcome;

/**
 * A parsed and assembled problem.
 */
typedef struct HeqProblem HeqProblem;

/**
 * The result of a run.
 */
typedef struct HeqTrajectory HeqTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses a problem file held in `src` (NUL-terminated TOML).
 *
 * # Safety
 * `src` must be a valid C string and `out` a valid pointer.
 */
enum HeqStatus heq_problem_from_toml(const char *src, struct HeqProblem **out);

/**
 * Loads one of the bundled presets by name.
 *
 * # Safety
 * `name` must be a valid C string and `out` a valid pointer.
 */
enum HeqStatus heq_problem_from_preset(const char *name, struct HeqProblem **out);

/**
 * # Safety
 * `p` must come from a `heq_problem_from_*` call, or be null.
 */
void heq_problem_free(struct HeqProblem *p);

/**
 * Dimension of the problem, or 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t heq_problem_dimension(const struct HeqProblem *p);

/**
 * Overrides the iteration cap and disables the tolerance-based stops.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum HeqStatus heq_problem_set_max_iters(struct HeqProblem *p, size_t max_iters);

/**
 * Checks the schedules against the problem's theorem.
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum HeqStatus heq_validate(const struct HeqProblem *p, enum HeqOutcome *out);

/**
 * Runs the iteration. With `certify` set, the certificate is evaluated
 * at the known solution (or the oracle's).
 *
 * # Safety
 * `p` must be a live handle and `out` a valid pointer.
 */
enum HeqStatus heq_run(const struct HeqProblem *p, bool certify, struct HeqTrajectory **out);

/**
 * # Safety
 * `t` must come from [`heq_run`], or be null.
 */
void heq_trajectory_free(struct HeqTrajectory *t);

/**
 * # Safety
 * `t` must be a live handle or null.
 */
size_t heq_trajectory_iterations(const struct HeqTrajectory *t);

/**
 * Copies the last iterate into `buf` (`len` ≥ dimension).
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` writes.
 */
enum HeqStatus heq_trajectory_final_point(const struct HeqTrajectory *t, double *buf, size_t len);

/**
 * Copies the weighted ergodic average into `buf`.
 *
 * # Safety
 * `t` must be a live handle and `buf` valid for `len` writes.
 */
enum HeqStatus heq_trajectory_ergodic_average(const struct HeqTrajectory *t,
                                              double *buf,
                                              size_t len);

/**
 * Smallest certificate value; `NotAvailable` unless the run certified.
 *
 * # Safety
 * `t` must be a live handle and `out` a valid pointer.
 */
enum HeqStatus heq_trajectory_certificate_min(const struct HeqTrajectory *t, double *out);

/**
 * The per-iteration CSV as a new string; release it with
 * [`heq_string_free`].
 *
 * # Safety
 * `t` must be a live handle and `out` a valid pointer.
 */
enum HeqStatus heq_trajectory_csv(const struct HeqTrajectory *t, char **out);

/**
 * Reference solution from the independent oracle.
 *
 * # Safety
 * `p` must be a live handle and `buf` valid for `len` writes.
 */
enum HeqStatus heq_oracle_solution(const struct HeqProblem *p, double *buf, size_t len);

/**
 * # Safety
 * `s` must come from this library, or be null.
 */
void heq_string_free(char *s);

/**
 * Message for the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *heq_last_error(void);

/**
 * Library version as a static string.
 */
const char *heq_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEQ_H */
