#ifndef ROBEXT_H
#define ROBEXT_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RobextStatus {
  ROBEXT_STATUS_OK = 0,
  ROBEXT_STATUS_NULL_POINTER = 1,
  ROBEXT_STATUS_INVALID_PARAMETER = 2,
  ROBEXT_STATUS_INVALID_INPUT = 3,
  // Quadrature, root finding or optimisation failed.
  ROBEXT_STATUS_NOT_CONVERGED = 4,
  ROBEXT_STATUS_DEGENERATE = 5,
  ROBEXT_STATUS_NOT_DOMINATED = 6,
  ROBEXT_STATUS_SUPPORT_MISMATCH = 7,
  ROBEXT_STATUS_IO = 8,
  // An internal panic was caught at the boundary.
  ROBEXT_STATUS_PANIC = 9,
} RobextStatus;

typedef enum RobextRegime {
  ROBEXT_REGIME_SQRT_EXACT = 0,
  ROBEXT_REGIME_EXACT_SOLVED = 1,
  ROBEXT_REGIME_DEGENERATE = 2,
  // The solver failed; only the square-root value is valid.
  ROBEXT_REGIME_CONSERVATIVE = 3,
} RobextRegime;

typedef enum RobextMeasure {
  // The reference model itself.
  ROBEXT_MEASURE_REFERENCE = 0,
  ROBEXT_MEASURE_LEBESGUE = 1,
} RobextMeasure;

typedef enum RobextDirection {
  ROBEXT_DIRECTION_LOWER = 0,
  ROBEXT_DIRECTION_UPPER = 1,
} RobextDirection;

// Opaque spectral model.
typedef struct RobextModel RobextModel;

// Opaque portfolio specification.
typedef struct RobextPortfolio RobextPortfolio;

// Result of [`robext_exact_bound`]. Missing values are NaN.
typedef struct RobextBound {
  double model_value;
  double sqrt_value;
  double exact_value;
  enum RobextRegime regime;
  double delta_star;
  double delta_star_star;
} RobextBound;

// Result of [`robext_portfolio_var_bounds`].
typedef struct RobextVarBounds {
  double e_x;
  double ratio_lower;
  double ratio_upper;
  // Jackknife standard error of `ratio_upper`.
  double ratio_upper_se;
  // Nonzero when the constraint covariance was singular.
  int32_t singular;
} RobextVarBounds;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version, a static NUL-terminated string.
const char *robext_version(void);

// Message of the last failed call on this thread; empty if none. Valid
// until the next failing call on the same thread.
const char *robext_last_error(void);

// Parses a model such as `"HR(0.6)"`, `"AL(0.4,0.7,1)"` or `"ET(0.5,2)"`.
//
// # Safety
// `spec` must be a NUL-terminated string and `out` writable.
enum RobextStatus robext_model_parse(const char *spec, struct RobextModel **out);

// # Safety
// `out` must be writable.
enum RobextStatus robext_model_husler_reiss(double lambda, struct RobextModel **out);

// # Safety
// `out` must be writable.
enum RobextStatus robext_model_asymmetric_logistic(double a,
                                                   double b1,
                                                   double b2,
                                                   struct RobextModel **out);

// # Safety
// `out` must be writable.
enum RobextStatus robext_model_extremal_t(double rho, double a, struct RobextModel **out);

// Releases a model; null is ignored.
//
// # Safety
// `model` must come from this library and not be used afterwards.
void robext_model_free(struct RobextModel *model);

// Writes the model's canonical text form into `buf` (truncated and always
// NUL-terminated when `len > 0`) and its full length, excluding the NUL,
// into `needed` if that is not null.
//
// # Safety
// `buf` must hold `len` bytes.
enum RobextStatus robext_model_describe(const struct RobextModel *model,
                                        char *buf,
                                        size_t len,
                                        size_t *needed);

// Pickands' dependence function `A(z)`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RobextStatus robext_pickands(const struct RobextModel *model, double z, double *out);

// Extremal coefficient `2 A(1/2)`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RobextStatus robext_extremal_coefficient(const struct RobextModel *model, double *out);

// Divergence of `q` from the reference `p` under the measure code `mu`;
// infinity when `q` is not dominated.
//
// # Safety
// Both handles must be live and `out` writable.
enum RobextStatus robext_divergence(const struct RobextModel *q,
                                    const struct RobextModel *p,
                                    uint32_t mu,
                                    double *out);

// Largest radius at which the square-root bound on `A(z)` is attained.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RobextStatus robext_delta_star(const struct RobextModel *model,
                                    double z,
                                    uint32_t mu,
                                    uint32_t dir,
                                    double *out);

// Square-root bound on `A(z)` at radius `delta`, not clipped.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RobextStatus robext_sqrt_bound(const struct RobextModel *model,
                                    double z,
                                    uint32_t mu,
                                    double delta,
                                    uint32_t dir,
                                    double *out);

// Exact bound on `A(z)` over the ball of radius `delta`.
//
// # Safety
// `model` must be a live handle and `out` writable.
enum RobextStatus robext_exact_bound(const struct RobextModel *model,
                                     double z,
                                     uint32_t mu,
                                     double delta,
                                     uint32_t dir,
                                     struct RobextBound *out);

// Portfolio of `d` assets with weights `weights`, tail index `alpha`,
// marginal scales `scales` (null for all ones) and a symmetric Dirichlet
// spectral law with concentration `beta`.
//
// # Safety
// `weights` (and `scales` unless null) must hold `d` values; `out` must be
// writable.
enum RobextStatus robext_portfolio_new(const double *weights,
                                       const double *scales,
                                       size_t d,
                                       double alpha,
                                       double beta,
                                       struct RobextPortfolio **out);

// # Safety
// `p` must come from this library and not be used afterwards.
void robext_portfolio_free(struct RobextPortfolio *p);

// Monte Carlo bounds on the asymptotic VaR ratio at radius `delta` from
// `n` simplex draws of stream `seed`.
//
// # Safety
// `p` must be a live handle and `out` writable.
enum RobextStatus robext_portfolio_var_bounds(const struct RobextPortfolio *p,
                                              double delta,
                                              size_t n,
                                              uint64_t seed,
                                              struct RobextVarBounds *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ROBEXT_H */
