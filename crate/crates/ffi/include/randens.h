#ifndef RANDENS_H
#define RANDENS_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/*
 Number of partials in a field bundle: orders 0..=3 in slot order
 `n(n+1)/2 + j` for the index `(n - j, j)`.
 */
#define RD_N_PARTIALS 10

typedef enum RdStatus {
  RD_STATUS_OK = 0,
  RD_STATUS_NULL_POINTER = 1,
  RD_STATUS_INVALID_UTF8 = 2,
  RD_STATUS_PARSE = 3,
  RD_STATUS_DOMAIN = 4,
  RD_STATUS_INVALID_SOURCE = 5,
  RD_STATUS_CONFIG = 6,
  RD_STATUS_NON_CONVERGENCE = 7,
  RD_STATUS_SENTINEL = 8,
  RD_STATUS_PANIC = 99,
} RdStatus;

typedef enum RdFamily {
  RD_FAMILY_HEAT = 0,
  RD_FAMILY_LAPLACE = 1,
} RdFamily;

typedef enum RdMethod {
  RD_METHOD_CLOSED = 0,
  RD_METHOD_DIRECT = 1,
} RdMethod;

typedef enum RdMode {
  RD_MODE_PRINTED = 0,
  RD_MODE_CORRECTED = 1,
} RdMode;

/*
 Opaque source density.
 */
typedef struct RdSource RdSource;

/*
 Quadrature tolerances; unbounded domains use the library's default windows.
 */
typedef struct RdQuadConfig {
  double abs_tol;
  double rel_tol;
  size_t max_subdivisions;
  double tail_tol;
} RdQuadConfig;

typedef struct RdMetric {
  double g11;
  double g12;
  double g22;
} RdMetric;

typedef struct RdTensor {
  double t111;
  double t112;
  double t122;
  double t222;
} RdTensor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Default quadrature settings.
 */
struct RdQuadConfig rd_default_config(void);

/*
 Message for the last failed call on this thread, or null. Valid until the
 next failing call on the same thread.
 */
const char *rd_last_error_message(void);

/*
 Parse a source descriptor such as `gaussian:mu=0,sigma=1`.

 # Safety
 `descriptor` must be a NUL-terminated string; `out_source` must be writable.
 */
enum RdStatus rd_source_parse(const char *descriptor, struct RdSource **out_source);

/*
 Release a handle from [`rd_source_parse`]. Null is ignored.

 # Safety
 `source` must come from [`rd_source_parse`] and not be freed twice.
 */
void rd_source_free(struct RdSource *source);

/*
 Canonical descriptor of a source, written into `buf` with a trailing NUL.
 `needed` receives the full length including the NUL; a short buffer gets a
 truncated string.

 # Safety
 `buf` must hold `len` bytes (or be null with `len == 0`).
 */
enum RdStatus rd_source_describe(const struct RdSource *source,
                                 char *buf,
                                 size_t len,
                                 size_t *needed);

/*
 One partial `∂^i_1 ∂^j_2 h` of the unnormalized kernel (`exp(-w²/4t)` or
 `1/(x² + w²)`) at scale (`t` or `x`) and offset `w`.

 # Safety
 `out_value` must be writable.
 */
enum RdStatus rd_kernel_partial(enum RdFamily fam,
                                double scale,
                                double offset,
                                uint8_t i,
                                uint8_t j,
                                double *out_value);

/*
 All partials of the field `u` up to order 3 at `(p1, p2)`.

 # Safety
 `source` must be a live handle; `out_partials` must hold
 [`RD_N_PARTIALS`] doubles; `out_err` may be null.
 */
enum RdStatus rd_field_derivs(const struct RdSource *source,
                              enum RdFamily fam,
                              double p1,
                              double p2,
                              const struct RdQuadConfig *config,
                              double *out_partials,
                              double *out_err);

/*
 Fisher metric and structure tensor at `(p1, p2)`.

 `formula` applies to the closed method only. Either output pointer may be
 null when that half is not wanted, as may `out_err`.

 # Safety
 `source` must be a live handle; non-null outputs must be writable.
 */
enum RdStatus rd_geometry(const struct RdSource *source,
                          enum RdFamily fam,
                          double p1,
                          double p2,
                          enum RdMethod method,
                          enum RdMode formula,
                          const struct RdQuadConfig *config,
                          struct RdMetric *out_metric,
                          struct RdTensor *out_tensor,
                          double *out_err);

/*
 Positive-definiteness and eigenvalues of a metric. `lambda1` pairs with the
 eigenvector nearer the first axis.

 # Safety
 `g` must be readable; outputs must be writable.
 */
enum RdStatus rd_pd_check(const struct RdMetric *g,
                          bool *out_is_pd,
                          double *out_lambda1,
                          double *out_lambda2);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RANDENS_H */
