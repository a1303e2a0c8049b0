#ifndef WENTZELL_H
#define WENTZELL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WzStatus {
  WZ_STATUS_OK = 0,
  WZ_STATUS_NULL_POINTER = 1,
  WZ_STATUS_INVALID_ARGUMENT = 2,
  WZ_STATUS_INVALID_CURVE = 3,
  WZ_STATUS_SOLVER_FAILURE = 4,
  WZ_STATUS_OUT_OF_RANGE = 5,
  WZ_STATUS_PANIC = 6,
} WzStatus;

// Opaque boundary curve.
typedef struct WzCurve WzCurve;

// Opaque computed spectrum.
typedef struct WzSpectrum WzSpectrum;

typedef struct WzBounds {
  double lambda1;
  double m1;
  double m2;
  double m3;
  // Smallest signed margin over the whole inequality chain.
  double min_margin;
  // 1 if the chain holds, 0 otherwise.
  int32_t holds;
} WzBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if none.
// The pointer stays valid until the next failing call on the same thread.
const char *wz_last_error(void);

// Disk of radius `radius`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WzStatus wz_curve_circle(double radius, struct WzCurve **out);

// Ellipse with semi-axes `a`, `b`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WzStatus wz_curve_ellipse(double a, double b, struct WzCurve **out);

// Star domain `ρ(θ) = a(2 + cos kθ)`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WzStatus wz_curve_star(uint32_t k, double a, struct WzCurve **out);

// Unit-area stadium of width `eps`.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum WzStatus wz_curve_stadium(double eps, struct WzCurve **out);

// Polar curve `ρ(θ) = a0 + Σ_{k=1}^{n} (cos_k cos kθ + sin_k sin kθ)`.
//
// # Safety
// `cos_coeffs` and `sin_coeffs` must each point to `n` readable doubles (either may be null when `n` is 0);
// `out` must be a valid pointer to writable storage for one handle.
enum WzStatus wz_curve_polar(double a0,
                             const double *cos_coeffs,
                             const double *sin_coeffs,
                             size_t n,
                             struct WzCurve **out);

// Rescale `curve` in place so its area equals `area`.
//
// # Safety
// `curve` must be a live handle from one of the `wz_curve_*` constructors.
enum WzStatus wz_curve_set_area(struct WzCurve *curve, double area);

// # Safety
// `curve` must be a live handle and `out` writable.
enum WzStatus wz_curve_area(const struct WzCurve *curve, double *out);

// # Safety
// `curve` must be null or a handle not yet freed.
void wz_curve_free(struct WzCurve *curve);

// Solve the Wentzell eigenproblem on `curve` with a basis of degree `degree`
// and `nodes ≥ 8·degree` boundary nodes.
//
// # Safety
// `curve` must be a live handle; `out` must be writable.
enum WzStatus wz_spectrum_compute(const struct WzCurve *curve,
                                  double beta,
                                  size_t degree,
                                  size_t nodes,
                                  struct WzSpectrum **out);

// Solve with the boundary-integral method on `nodes` (even) equispaced
// nodes; smooth curves only. Preferred for strongly non-convex curves.
//
// # Safety
// `curve` must be a live handle; `out` must be writable.
enum WzStatus wz_spectrum_compute_nystrom(const struct WzCurve *curve,
                                          double beta,
                                          size_t nodes,
                                          struct WzSpectrum **out);

// Number of resolved eigenvalues, or 0 for a null handle.
//
// # Safety
// `spec` must be null or a live handle.
size_t wz_spectrum_len(const struct WzSpectrum *spec);

// Eigenvalue `k` (0-based, ascending; index 0 is the constant mode).
//
// # Safety
// `spec` must be a live handle and `out` writable.
enum WzStatus wz_spectrum_eigenvalue(const struct WzSpectrum *spec, size_t k, double *out);

// # Safety
// `spec` must be null or a handle not yet freed.
void wz_spectrum_free(struct WzSpectrum *spec);

// `λ₁` and the upper bounds `M1 ≤ M2 ≤ M3` for `curve`.
//
// # Safety
// `curve` must be a live handle and `out` writable.
enum WzStatus wz_bounds(const struct WzCurve *curve,
                        double beta,
                        size_t degree,
                        size_t nodes,
                        struct WzBounds *out);

// Eigenvalue of the ball of radius `r` in dimension `d` carried by harmonics of order `l`.
double wz_ball_eigenvalue(uint32_t l, uint32_t d, double beta, double r);

// Closed-form second derivative of `λ₁ + λ₂` at the disk of radius `r` along
// the area-preserving deformation with normal velocity `cos lθ`.
//
// # Safety
// `out` must be writable.
enum WzStatus wz_second_order_trace(uint32_t l, double beta, double r, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WENTZELL_H */
