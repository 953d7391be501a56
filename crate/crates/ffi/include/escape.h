#ifndef ESCAPE_H
#define ESCAPE_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EscStatus {
  ESC_STATUS_OK = 0,
  ESC_STATUS_NULL_POINTER = 1,
  ESC_STATUS_INVALID_ARGUMENT = 2,
  ESC_STATUS_CONFIG = 3,
  ESC_STATUS_NUMERICAL = 4,
  ESC_STATUS_UNSUPPORTED = 5,
  ESC_STATUS_BUFFER_TOO_SMALL = 6,
  ESC_STATUS_PANIC = 7,
} EscStatus;

/*
 Solution on a uniform interior grid.
 */
typedef struct EscGrid EscGrid;

/*
 Escape problem handle.
 */
typedef struct EscProblem EscProblem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 NUL-terminated library version; static storage.
 */
const char *esc_version(void);

/*
 Copy the last error message of this thread into `buf` (NUL-terminated, truncated to fit).
 Returns the full message length in bytes, excluding the terminator.

 # Safety
 `buf` must be null or valid for `len` bytes.
 */
size_t esc_last_error(char *buf, size_t len);

/*
 Parse a problem from `key = value` text.

 # Safety
 `text` must be a valid NUL-terminated string; `out` must be valid for writes.
 */
enum EscStatus esc_problem_parse(const char *text, struct EscProblem **out);

/*
 Unit Brownian motion plus ε-scaled α-stable noise on (−1, 1), escaping to the right.

 # Safety
 `out` must be valid for writes.
 */
enum EscStatus esc_problem_brownian(double alpha, double epsilon, struct EscProblem **out);

/*
 Canonical text of `problem`, copied like [`esc_last_error`]. Returns the full length.

 # Safety
 `problem` must be a live handle; `buf` must be null or valid for `len` bytes.
 */
size_t esc_problem_text(const struct EscProblem *problem, char *buf, size_t len);

/*
 # Safety
 `problem` must be null or a handle not yet freed.
 */
void esc_problem_free(struct EscProblem *problem);

/*
 Solve for the escape probability on `n` interior nodes.

 # Safety
 `problem` must be a live handle; `out` must be valid for writes.
 */
enum EscStatus esc_solve(const struct EscProblem *problem, size_t n, struct EscGrid **out);

/*
 Number of interior nodes.

 # Safety
 `grid` must be null or a live handle.
 */
size_t esc_grid_len(const struct EscGrid *grid);

/*
 Copy nodes and values into arrays of length at least [`esc_grid_len`]. Either array may be null.

 # Safety
 `grid` must be a live handle; non-null arrays must be valid for `len` doubles.
 */
enum EscStatus esc_grid_copy(const struct EscGrid *grid, double *xs, double *ps, size_t len);

/*
 Piecewise-linear value at `x`, exterior constants outside the domain.

 # Safety
 `grid` must be a live handle; `out` must be valid for writes.
 */
enum EscStatus esc_grid_eval(const struct EscGrid *grid, double x, double *out);

/*
 # Safety
 `grid` must be null or a handle not yet freed.
 */
void esc_grid_free(struct EscGrid *grid);

/*
 Monte Carlo estimate of the escape probability from `x0`; `t_max <= 0` selects the default horizon.

 # Safety
 `problem` must be a live handle; `p_hat` and `std_err` must be valid for writes.
 */
enum EscStatus esc_mc_estimate(const struct EscProblem *problem,
                               double x0,
                               size_t n_paths,
                               double dt,
                               double t_max,
                               uint64_t seed,
                               double *p_hat,
                               double *std_err);

/*
 C_{1,α}, the normalizing constant of the α-stable jump kernel.

 # Safety
 `out` must be valid for writes.
 */
enum EscStatus esc_stable_constant(double alpha, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ESCAPE_H */
