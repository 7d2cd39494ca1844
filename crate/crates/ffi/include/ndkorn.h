#ifndef NDKORN_H
#define NDKORN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum NdkStatus {
  NDK_STATUS_OK = 0,
  NDK_STATUS_NULL_POINTER = 1,
  NDK_STATUS_INVALID_ARGUMENT = 2,
  NDK_STATUS_INVALID_DOMAIN = 3,
  NDK_STATUS_DISCONNECTED_BOUNDARY = 4,
  NDK_STATUS_HARMONIC_FORMS_PRESENT = 5,
  NDK_STATUS_NUMERICAL_FAILURE = 6,
  NDK_STATUS_INVARIANT_VIOLATION = 7,
  NDK_STATUS_PANIC = 8,
} NdkStatus;

typedef enum NdkBcMode {
  NDK_BC_MODE_FULL_DIRICHLET = 0,
  NDK_BC_MODE_TANGENTIAL = 1,
} NdkBcMode;

/**
 * Opaque domain handle.
 */
typedef struct NdkDomain NdkDomain;

/**
 * Korn results for one vector field.
 */
typedef struct NdkKornResult {
  double ratio;
  double identity_residual;
  double grad_norm;
  double sym_grad_norm;
  double div_norm;
} NdkKornResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ndk_version(void);

/**
 * Copies the last error message of this thread into `buf` (truncated,
 * always NUL-terminated when `len > 0`). Returns the full message length
 * without the terminator.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ndk_last_error_message(char *buf, size_t len);

/**
 * Builds a stock domain (`"box"`, `"ball"`, `"annulus"`, `"shell"`,
 * `"solid_torus"`) on the unit cube with `n` vertices per axis.
 *
 * # Safety
 * `kind` must be a NUL-terminated string, `out` a valid pointer.
 */
enum NdkStatus ndk_domain_new(const char *kind, size_t dim, size_t n, struct NdkDomain **out);

/**
 * Releases a handle from [`ndk_domain_new`]; null is ignored.
 *
 * # Safety
 * `d` must come from [`ndk_domain_new`] and not be used afterwards.
 */
void ndk_domain_free(struct NdkDomain *d);

/**
 * # Safety
 * `d` must be a live handle, `out` a valid pointer.
 */
enum NdkStatus ndk_domain_num_vertices(const struct NdkDomain *d, size_t *out);

/**
 * # Safety
 * `d` must be a live handle, `out` a valid pointer.
 */
enum NdkStatus ndk_domain_boundary_components(const struct NdkDomain *d, size_t *out);

/**
 * Poincare constant of `q`-forms and the spectral gap ratio behind it.
 *
 * # Safety
 * `d` must be a live handle; `constant` and `gap_ratio` valid pointers.
 */
enum NdkStatus ndk_poincare_constant(const struct NdkDomain *d,
                                     size_t q,
                                     enum NdkBcMode mode,
                                     double eig_tol,
                                     double *constant,
                                     double *gap_ratio);

/**
 * Number of harmonic Dirichlet `q`-forms (tangential complex).
 *
 * # Safety
 * `d` must be a live handle, `out` a valid pointer.
 */
enum NdkStatus ndk_harmonic_dimension(const struct NdkDomain *d,
                                      size_t q,
                                      double eig_tol,
                                      size_t *out);

/**
 * Best constant of `|T| <= c (|sym T|^2 + |Curl T|^2)^(1/2)` and the
 * bound `c_hat = max{2, sqrt(5) c_m}`.
 *
 * # Safety
 * `d` must be a live handle; `c_sharp` and `c_hat_out` valid pointers.
 */
enum NdkStatus ndk_sharp_constant(const struct NdkDomain *d,
                                  enum NdkBcMode mode,
                                  double eig_tol,
                                  double *c_sharp,
                                  double *c_hat_out);

/**
 * Korn check of a caller-supplied vector field: `N` blocks of one value
 * per grid vertex, `len = N * num_vertices`. With `tangential_variant`
 * each component must be constant on the boundary; otherwise it must
 * vanish there.
 *
 * # Safety
 * `d` must be a live handle, `values` must point to `len` doubles and
 * `out` must be valid.
 */
enum NdkStatus ndk_korn_check(const struct NdkDomain *d,
                              const double *values,
                              size_t len,
                              bool tangential_variant,
                              struct NdkKornResult *out);

/**
 * Korn check of a random Dirichlet vector field drawn from `seed`.
 *
 * # Safety
 * `d` must be a live handle, `out` a valid pointer.
 */
enum NdkStatus ndk_korn_check_random(const struct NdkDomain *d,
                                     uint64_t seed,
                                     struct NdkKornResult *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NDKORN_H */
