#ifndef SEMITROTTER_H
#define SEMITROTTER_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum StScheme {
  ST_SCHEME_FINITE_DIFFERENCE = 0,
  ST_SCHEME_SPECTRAL = 1,
} StScheme;

// Result of every fallible call.
typedef enum StStatus {
  ST_STATUS_OK = 0,
  ST_STATUS_NULL_POINTER = 1,
  ST_STATUS_INVALID_ARGUMENT = 2,
  ST_STATUS_PARSE = 3,
  ST_STATUS_CONFIG = 4,
  ST_STATUS_DIMENSION_MISMATCH = 5,
  ST_STATUS_NO_CONVERGENCE = 6,
  ST_STATUS_NOT_HERMITIAN = 7,
  ST_STATUS_IO = 8,
  // A verification run found violations.
  ST_STATUS_VERIFICATION_FAILED = 9,
  ST_STATUS_PANIC = 10,
} StStatus;

// Parsed expression in `x`.
typedef struct StExpr StExpr;

// Dense complex matrix.
typedef struct StMatrix StMatrix;

// Splitting plan (stage coefficients and generators).
typedef struct StPlan StPlan;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *st_last_error(void);

// Library version as a static nul-terminated string.
const char *st_version(void);

// Parses an expression such as `"cos(x) + 0.5*x^2"`.
//
// # Safety
// `source` must be a nul-terminated string and `out` writable.
enum StStatus st_expr_parse(const char *source, struct StExpr **out);

// # Safety
// `e` must come from [`st_expr_parse`]; `out` must be writable.
enum StStatus st_expr_eval(const struct StExpr *e, double x, double *out);

// # Safety
// `e` must come from [`st_expr_parse`] or be null.
void st_expr_free(struct StExpr *e);

// Builds a `rows × cols` matrix from `2·rows·cols` doubles holding
// interleaved real and imaginary parts in row-major order.
//
// # Safety
// `data` must point to `2·rows·cols` readable doubles; `out` writable.
enum StStatus st_matrix_new(size_t rows, size_t cols, const double *data, struct StMatrix **out);

// # Safety
// `m` must be a live matrix handle.
size_t st_matrix_rows(const struct StMatrix *m);

// # Safety
// `m` must be a live matrix handle.
size_t st_matrix_cols(const struct StMatrix *m);

// Copies the entries, interleaved as in [`st_matrix_new`], into `out`,
// which must hold `len ≥ 2·rows·cols` doubles.
//
// # Safety
// `out` must point to `len` writable doubles.
enum StStatus st_matrix_copy(const struct StMatrix *m, double *out, size_t len);

// # Safety
// `m` must be a handle from this library or null.
void st_matrix_free(struct StMatrix *m);

// Largest singular value.
//
// # Safety
// `m` must be a live matrix handle; `out` writable.
enum StStatus st_matrix_spectral_norm(const struct StMatrix *m, double *out);

// `[x, y] = xy − yx`.
//
// # Safety
// `x`, `y` must be live matrix handles; `out` writable.
enum StStatus st_matrix_commutator(const struct StMatrix *x,
                                   const struct StMatrix *y,
                                   struct StMatrix **out);

// Kinetic part `A` and potential part `B` of the Hamiltonian on an
// `n`-point periodic grid over `[−π, π)`, with `V` given by `potential`.
//
// # Safety
// `potential` must be a nul-terminated string; `a_out`, `b_out` writable.
enum StStatus st_model_build(double h,
                             size_t n,
                             enum StScheme scheme,
                             const char *potential,
                             struct StMatrix **a_out,
                             struct StMatrix **b_out);

// Suzuki plan of order `p` (1 or even up to 10).
//
// # Safety
// `out` must be writable.
enum StStatus st_plan_suzuki(size_t p, struct StPlan **out);

// Number of stages.
//
// # Safety
// `plan` must be a live plan handle.
size_t st_plan_len(const struct StPlan *plan);

// # Safety
// `plan` must be a handle from [`st_plan_suzuki`] or null.
void st_plan_free(struct StPlan *plan);

// One split step `U_p(dt)`.
//
// # Safety
// All handles must be live; `out` writable.
enum StStatus st_trotter_step(const struct StPlan *plan,
                              const struct StMatrix *a,
                              const struct StMatrix *b,
                              double dt,
                              struct StMatrix **out);

// `e^{−iHt}` for Hermitian `H`.
//
// # Safety
// `h` must be a live matrix handle; `out` writable.
enum StStatus st_exact_unitary(const struct StMatrix *h, double t, struct StMatrix **out);

// Runs an experiment (`"dt-sweep"`, `"h-sweep"`, `"comm-sweep"`,
// `"beta"` or `"verify-symbolic"`) and writes its CSV/SVG files into
// `out_dir`. `config` holds `key = value` lines, or is null for defaults.
//
// # Safety
// String arguments must be nul-terminated; `config` may be null.
enum StStatus st_run_experiment(const char *experiment, const char *config, const char *out_dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SEMITROTTER_H */
