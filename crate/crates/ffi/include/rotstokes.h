#ifndef ROTSTOKES_H
#define ROTSTOKES_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum RsStatus {
  RS_STATUS_OK = 0,
  RS_STATUS_NULL_POINTER = 1,
  RS_STATUS_INVALID_ARGUMENT = 2,
  RS_STATUS_SINGULAR_FREQUENCY = 3,
  RS_STATUS_INCOMPATIBLE = 4,
  RS_STATUS_GEOMETRY = 5,
  RS_STATUS_NO_CONVERGENCE = 6,
  RS_STATUS_NUMERICAL = 7,
  RS_STATUS_PANIC = 8,
} RsStatus;

// Solved channel; opaque to C.
typedef struct RsChannel RsChannel;

// Boundary trace on the torus; opaque to C.
typedef struct RsHalfspace RsHalfspace;

typedef struct RsComplex {
  double re;
  double im;
} RsComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the length of the full message without NUL.
//
// # Safety
// `buf` is null or valid for `len` bytes.
size_t rs_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *rs_version(void);

// The three exponents λ₁, λ₂, λ₃ with positive real part at ξ = (xi1, xi2).
//
// # Safety
// `out` is valid for 3 elements.
enum RsStatus rs_characteristic_roots(double xi1, double xi2, struct RsComplex *out);

// DtN symbol M(ξ) as 9 entries, row-major.
//
// # Safety
// `out` is valid for 9 elements.
enum RsStatus rs_dtn_symbol(double xi1, double xi2, struct RsComplex *out);

// Half-space problem with boundary velocity (u1, u2, u3) on x₃ = 0.
//
// # Safety
// `u1`, `u2`, `u3` are valid for `n*n` doubles; `out` is a valid pointer.
enum RsStatus rs_halfspace_new(size_t n,
                               double period,
                               const double *u1,
                               const double *u2,
                               const double *u3,
                               struct RsHalfspace **out);

// Grid size n of the handle, 0 for null.
//
// # Safety
// `h` is null or a live handle.
size_t rs_halfspace_grid(const struct RsHalfspace *h);

// Velocity and, if `p` is not null, pressure at height `x3 >= 0`.
//
// # Safety
// `h` is a live handle; output arrays are valid for `n*n` doubles.
enum RsStatus rs_halfspace_velocity(const struct RsHalfspace *h,
                                    double x3,
                                    double *u1,
                                    double *u2,
                                    double *u3,
                                    double *p);

// Traction −∂₃u + p e₃ on x₃ = 0, which is the DtN map applied to the trace.
//
// # Safety
// `h` is a live handle; output arrays are valid for `n*n` doubles.
enum RsStatus rs_halfspace_traction(const struct RsHalfspace *h,
                                    double *t1,
                                    double *t2,
                                    double *t3);

// # Safety
// `h` is null or a handle from `rs_halfspace_new`, not used afterwards.
void rs_halfspace_free(struct RsHalfspace *h);

// Channel ω < x₃ < 0 with bottom `omega`, velocity (u1, u2, u3) on the bottom
// and the transparent condition on x₃ = 0. `n_v` velocity nodes per column;
// `tolerance` is the relative GMRES residual for non-flat bottoms.
//
// # Safety
// `omega`, `u1`, `u2`, `u3` are valid for `n*n` doubles; `out` is a valid pointer.
enum RsStatus rs_channel_solve(size_t n,
                               double period,
                               size_t n_v,
                               const double *omega,
                               const double *u1,
                               const double *u2,
                               const double *u3,
                               double tolerance,
                               struct RsChannel **out);

// Number of σ levels (the velocity nodes per column), 0 for null.
//
// # Safety
// `h` is null or a live handle.
size_t rs_channel_levels(const struct RsChannel *h);

// GMRES iterations of the solve; 0 for flat bottoms and null.
//
// # Safety
// `h` is null or a live handle.
size_t rs_channel_iterations(const struct RsChannel *h);

// Velocity at σ level `level`, from 0 on the bottom to `levels - 1` on x₃ = 0.
//
// # Safety
// `h` is a live handle; output arrays are valid for `n*n` doubles.
enum RsStatus rs_channel_velocity(const struct RsChannel *h,
                                  size_t level,
                                  double *u1,
                                  double *u2,
                                  double *u3);

// # Safety
// `h` is null or a handle from `rs_channel_solve`, not used afterwards.
void rs_channel_free(struct RsChannel *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROTSTOKES_H */
