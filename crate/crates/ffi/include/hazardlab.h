#ifndef HAZARDLAB_H
#define HAZARDLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes.
typedef enum HlStatus {
  HL_STATUS_OK = 0,
  // Null pointer or invalid UTF-8.
  HL_STATUS_INVALID_ARGUMENT = 1,
  // Argument outside the function's domain.
  HL_STATUS_DOMAIN = 2,
  // Malformed configuration or failed model validation.
  HL_STATUS_CONFIG = 3,
  // Quadrature failure, singular kernel or broken internal contract.
  HL_STATUS_NUMERICAL = 4,
  // Output buffer too small; the required length was written.
  HL_STATUS_BUFFER_TOO_SMALL = 5,
  // Unexpected panic inside the library.
  HL_STATUS_INTERNAL = 6,
} HlStatus;

// A parsed run configuration: model, schedule and optional intensity and
// verification sections.
typedef struct HlModel HlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null. Valid until the
// next library call on the same thread; do not free.
const char *hl_last_error(void);

// Standard normal CDF.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_norm_cdf(double x, double *out);

// `ψ(η, t, y)`: probability that drifted Brownian motion stays above `y < 0` up to `t`.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_psi(double eta, double t, double y, double *out);

// `ψ` by quadrature of the killed density.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_psi_quadrature(double eta, double t, double y, double *out);

// `∂ψ/∂t`.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_psi_t(double eta, double t, double y, double *out);

// Joint law `φ(η, t, y1, y2)` of staying above `y1` and ending at or below `y2`.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_phi_joint(double eta, double t, double y1, double y2, double *out);

// Survival of a GBM started at `state` above `barrier` over `t`.
//
// # Safety
//
// `out` must be null or writable.
enum HlStatus hl_gbm_survival(double state,
                              double barrier,
                              double mu,
                              double sigma,
                              double t,
                              double *out);

// Parses and validates a JSON run configuration. On success `*out` owns a
// new model; release it with `hl_model_free`.
//
// # Safety
//
// `json` must be null or NUL-terminated; `out` null or writable.
enum HlStatus hl_model_from_json(const char *json, struct HlModel **out);

// Releases a model. Null is ignored.
//
// # Safety
//
// `model` must be null or an unfreed handle from `hl_model_from_json`.
void hl_model_free(struct HlModel *model);

// Intensity over the configured window. Writes up to `capacity` knots to
// `times` and `values` and the knot count to `*len`; if `capacity` is too
// small nothing else is written and `HL_STATUS_BUFFER_TOO_SMALL` returned.
// Pass `capacity = 0` with null buffers to query the length.
//
// # Safety
//
// `model` must be null or a live handle; `len` null or writable; `times` and
// `values` null or writable for `capacity` elements.
enum HlStatus hl_model_intensity(const struct HlModel *model,
                                 double *times,
                                 double *values,
                                 size_t capacity,
                                 size_t *len);

// Runs the configured verification. `seed < 0` uses `verify.seed`.
// `*report` receives the JSON report (free with `hl_string_free`) and
// `*passed` whether every test passed.
//
// # Safety
//
// `model` must be null or a live handle; `report` and `passed` null or writable.
enum HlStatus hl_model_verify_json(const struct HlModel *model,
                                   int64_t seed,
                                   char **report,
                                   bool *passed);

// Releases a string returned by the library. Null is ignored.
//
// # Safety
//
// `s` must be null or an unfreed string returned by this library.
void hl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HAZARDLAB_H */
