#ifndef VORTEX_SPECTRA_H
#define VORTEX_SPECTRA_H

/* Generated by cbindgen from src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Fiber class tag, numbered as in the library.
 */
typedef enum {
  VS_FIBER_TAG_DIAGONAL = 0,
  VS_FIBER_TAG_DECOUPLED_AT_ZERO = 1,
  VS_FIBER_TAG_OUTSIDE_DISC = 2,
  VS_FIBER_TAG_REDUCED_SYMMETRIC = 3,
  VS_FIBER_TAG_GENERAL = 4,
} VsFiberTag;

typedef enum {
  VS_FLAVOR_CENTER_STABLE = 0,
  VS_FLAVOR_UNSTABLE = 1,
  VS_FLAVOR_STABLE = 2,
  VS_FLAVOR_CENTER = 3,
  VS_FLAVOR_CENTER_UNSTABLE = 4,
} VsFlavor;

typedef enum {
  VS_STATUS_OK = 0,
  VS_STATUS_NULL_POINTER = 1,
  VS_STATUS_INVALID_PARAMETER = 2,
  VS_STATUS_PRECONDITION = 3,
  VS_STATUS_NO_CONVERGENCE = 4,
  VS_STATUS_BRACKETING = 5,
  VS_STATUS_NEAR_BAND = 6,
  VS_STATUS_SINGULAR_FIBER = 7,
  VS_STATUS_LINALG = 8,
  VS_STATUS_DELTA_TOO_LARGE = 9,
  VS_STATUS_FAILURE = 10,
  VS_STATUS_PANIC = 11,
  VS_STATUS_BUFFER_TOO_SMALL = 12,
} VsStatus;

/**
 * One lattice fiber `{k̂ + np}` of a single-mode state at fixed viscosity.
 */
typedef struct VsFiber VsFiber;

/**
 * Galerkin truncation with its spectral splitting.
 */
typedef struct VsManifold VsManifold;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static nul-terminated string.
 */
const char *vs_version(void);

/**
 * Bytes needed for the last error message including the terminating nul;
 * 0 when the last call on this thread succeeded.
 */
size_t vs_last_error_length(void);

/**
 * Copies the last error message into `buf`.
 *
 * # Safety
 * `buf` must be valid for `len` bytes.
 */
VsStatus vs_last_error_message(char *buf, size_t len);

/**
 * Fiber through `(k1, k2)` of a named example (1, 2 or 3). `alpha` is used by example 1 only.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VsStatus vs_fiber_new_example(int32_t example,
                              double alpha,
                              int64_t k1,
                              int64_t k2,
                              double nu,
                              VsFiber **out);

/**
 * Fiber of the state `Γ e^{ip·x} + c.c.` on the `alpha` domain.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
VsStatus vs_fiber_new(int64_t p1,
                      int64_t p2,
                      double gamma_re,
                      double gamma_im,
                      double alpha,
                      int64_t k1,
                      int64_t k2,
                      double nu,
                      VsFiber **out);

/**
 * # Safety
 * `fiber` must come from a `vs_fiber_new*` call and not be freed twice. Null is ignored.
 */
void vs_fiber_free(VsFiber *fiber);

/**
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_fiber_class(const VsFiber *fiber, VsFiberTag *out);

/**
 * Recurrence coefficient `a_n(λ)`.
 *
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_fiber_coefficient(const VsFiber *fiber,
                              double lambda_re,
                              double lambda_im,
                              int64_t n,
                              double *out_re,
                              double *out_im);

/**
 * Positive real eigenvalue of an even-symmetric fiber. A zero-width
 * bracket (`lo == hi`) selects the default one. `out_certified` receives
 * 1 inside the analytic bound, 0 outside, −1 when no bound is known.
 *
 * # Safety
 * Pointers must be valid; `out_certified` may be null.
 */
VsStatus vs_find_real_eigenvalue(const VsFiber *fiber,
                                 double lo,
                                 double hi,
                                 double *out_lambda,
                                 int32_t *out_certified);

/**
 * Complex eigenvalue by Newton from a seed.
 *
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_find_complex_eigenvalue(const VsFiber *fiber,
                                    double seed_re,
                                    double seed_im,
                                    double *out_re,
                                    double *out_im);

/**
 * Eigenvalues in `{Im λ ≥ 0, Re λ ≥ −ν, |λ+ν| ≤ 1/4}`.
 *
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_count_upper_half_disc(const VsFiber *fiber, size_t *out);

/**
 * Critical viscosity of example 1 (`example = 1`, `alpha ∈ [0.5, 0.95]`) or example 3.
 *
 * # Safety
 * `out` must be valid.
 */
VsStatus vs_find_nu_star(int32_t example, double alpha, double *out);

/**
 * Galerkin truncation `|k|_∞ ≤ k_max` of a named example with its spectral splitting.
 *
 * # Safety
 * `out` must be valid.
 */
VsStatus vs_manifold_new(int32_t example,
                         double alpha,
                         double nu,
                         size_t k_max,
                         uint32_t ell,
                         VsManifold **out);

/**
 * # Safety
 * `m` must come from [`vs_manifold_new`] and not be freed twice. Null is ignored.
 */
void vs_manifold_free(VsManifold *m);

/**
 * Coordinate dimension and the unstable, center and stable dimensions.
 *
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_manifold_dims(const VsManifold *m, size_t *dim, size_t *m_u, size_t *m_c, size_t *m_s);

/**
 * Admissible radius δ for a flavor at its default weight rate.
 *
 * # Safety
 * Pointers must be valid.
 */
VsStatus vs_manifold_delta(const VsManifold *m, VsFlavor flavor, double *out);

/**
 * Graph value `h(base)` of a manifold chart. `base` and `out` have
 * `dim` entries; `base` must lie in the flavor's base subspace within δ.
 *
 * # Safety
 * `base` and `out` must be valid for `dim` doubles; `out_contraction` may be null.
 */
VsStatus vs_manifold_graph(const VsManifold *m,
                           VsFlavor flavor,
                           const double *base,
                           size_t dim,
                           double *out,
                           double *out_contraction);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VORTEX_SPECTRA_H */
