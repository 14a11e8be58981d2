#ifndef SPFL_H
#define SPFL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum SpflStatus {
  SPFL_STATUS_OK = 0,
  SPFL_STATUS_NULL_POINTER = 1,
  SPFL_STATUS_INVALID_ARGUMENT = 2,
  SPFL_STATUS_VALIDATION = 3,
  SPFL_STATUS_DIMENSION_MISMATCH = 4,
  SPFL_STATUS_NON_CONVERGENCE = 5,
  SPFL_STATUS_DOMAIN = 6,
  SPFL_STATUS_GAP_VIOLATION = 7,
  SPFL_STATUS_CONCATENATION = 8,
  SPFL_STATUS_SUBDIVISION_FAILURE = 9,
  SPFL_STATUS_ORACLE_RESOLUTION = 10,
  SPFL_STATUS_PRECONDITION = 11,
  SPFL_STATUS_WINDING_RESOLUTION = 12,
  SPFL_STATUS_CONFIG = 13,
  SPFL_STATUS_INGESTION = 14,
  SPFL_STATUS_IO = 15,
  SPFL_STATUS_PANIC = 16,
} SpflStatus;

/**
 * Opaque Hermitian matrix.
 */
typedef struct SpflOperator SpflOperator;

/**
 * Opaque path of Hermitian matrices.
 */
typedef struct SpflPath SpflPath;

/**
 * Options for `spfl_spectral_flow`. A negative `guard` selects the default
 * guard relative to the path scale.
 */
typedef struct SpflFlowOptions {
  size_t probe_points;
  double guard;
  size_t max_depth;
} SpflFlowOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the most recent failure on this thread, or an empty string.
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *spfl_last_error(void);

struct SpflFlowOptions spfl_flow_options_default(void);

/**
 * Builds a Hermitian operator from a row-major `dim x dim` matrix.
 *
 * # Safety
 * `re` (and `im` unless null) must point to `dim * dim` doubles; `out` must
 * be writable.
 */
enum SpflStatus spfl_operator_new(size_t dim,
                                  const double *re,
                                  const double *im,
                                  struct SpflOperator **out);

/**
 * # Safety
 * `op` must come from `spfl_operator_new` and not be freed twice.
 */
void spfl_operator_free(struct SpflOperator *op);

/**
 * # Safety
 * `op` must be a live handle or null (giving 0).
 */
size_t spfl_operator_dim(const struct SpflOperator *op);

/**
 * Writes the ascending eigenvalues into `out`, which holds `len >= dim`
 * doubles.
 *
 * # Safety
 * `op` must be a live handle and `out` must hold `len` doubles.
 */
enum SpflStatus spfl_operator_eigenvalues(const struct SpflOperator *op, double *out, size_t len);

/**
 * `t -> (1-t) A + t B` on `[0, 1]`.
 *
 * # Safety
 * `a`, `b` must be live handles; `out` must be writable.
 */
enum SpflStatus spfl_path_linear(const struct SpflOperator *a,
                                 const struct SpflOperator *b,
                                 struct SpflPath **out);

/**
 * Piecewise-linear path through `samples` uniformly spaced row-major
 * matrices over `[start, end]`, stored consecutively.
 *
 * # Safety
 * `re` (and `im` unless null) must hold `samples * dim * dim` doubles.
 */
enum SpflStatus spfl_path_from_samples(size_t dim,
                                       size_t samples,
                                       double start,
                                       double end,
                                       const double *re,
                                       const double *im,
                                       struct SpflPath **out);

/**
 * Parses a matrix path file (`dim n samples m interval a b` followed by
 * `re,im` entries).
 *
 * # Safety
 * `text` must be a NUL-terminated string.
 */
enum SpflStatus spfl_path_parse(const char *text, struct SpflPath **out);

/**
 * The closed generator loop of dimension `dim >= 2`; its flow is 1.
 *
 * # Safety
 * `out` must be writable.
 */
enum SpflStatus spfl_path_generator_loop(size_t dim, struct SpflPath **out);

/**
 * # Safety
 * `p` must come from a `spfl_path_*` constructor and not be freed twice.
 */
void spfl_path_free(struct SpflPath *p);

/**
 * # Safety
 * `p` must be a live handle or null (giving 0).
 */
size_t spfl_path_dim(const struct SpflPath *p);

/**
 * Spectral flow by adaptive partition. `opts` may be null for defaults.
 *
 * # Safety
 * `p` must be a live handle, `opts` null or valid, `out` writable.
 */
enum SpflStatus spfl_spectral_flow(const struct SpflPath *p,
                                   const struct SpflFlowOptions *opts,
                                   int64_t *out);

/**
 * Crossing-count oracle on `samples` uniform parameters.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum SpflStatus spfl_spectral_flow_oracle(const struct SpflPath *p, size_t samples, int64_t *out);

/**
 * Winding number of `x -> exp(pi i (chi_n(D_x) + 1))` with the clamp
 * normalizing function of scale `chi_scale`.
 *
 * # Safety
 * `p` must be a live handle; `out` writable.
 */
enum SpflStatus spfl_exp_loop_winding(const struct SpflPath *p,
                                      uint32_t chi_scale,
                                      size_t points,
                                      int64_t *out);

/**
 * `ind(P, Q)` for row-major projection matrices of dimension `dim`.
 *
 * # Safety
 * Each non-null array must hold `dim * dim` doubles; `out` writable.
 */
enum SpflStatus spfl_projection_index(size_t dim,
                                      const double *p_re,
                                      const double *p_im,
                                      const double *q_re,
                                      const double *q_im,
                                      int64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPFL_H */
