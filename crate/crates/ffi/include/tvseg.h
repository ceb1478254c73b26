#ifndef TVSEG_H
#define TVSEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. The non-zero values below 5 match the exit codes of the
 * command-line tool.
 */
typedef enum TvsStatus {
  TVS_STATUS_OK = 0,
  /**
   * Invalid parameter or configuration.
   */
  TVS_STATUS_INVALID_PARAMETER = 1,
  /**
   * Invalid or inconsistent input data.
   */
  TVS_STATUS_INVALID_INPUT = 2,
  /**
   * The solver produced non-finite values.
   */
  TVS_STATUS_DIVERGENCE = 3,
  /**
   * The size constraints admit no labelling.
   */
  TVS_STATUS_INFEASIBLE_SIZE = 4,
  TVS_STATUS_NULL_POINTER = 5,
  /**
   * Internal error; the library caught a panic.
   */
  TVS_STATUS_PANIC = 6,
} TvsStatus;

typedef enum TvsWeightKind {
  /**
   * `exp(-d²/σ²)`, uses `sigma`.
   */
  TVS_WEIGHT_KIND_GAUSSIAN = 0,
  /**
   * Locally scaled weights, uses `m`.
   */
  TVS_WEIGHT_KIND_ZMP = 1,
} TvsWeightKind;

typedef enum TvsSizeMode {
  TVS_SIZE_MODE_NONE = 0,
  /**
   * `lower` holds the sizes.
   */
  TVS_SIZE_MODE_EXACT = 1,
  TVS_SIZE_MODE_INTERVAL = 2,
  TVS_SIZE_MODE_PENALTY = 3,
} TvsSizeMode;

/**
 * Opaque graph handle.
 */
typedef struct TvsGraph TvsGraph;

/**
 * Opaque solver result handle.
 */
typedef struct TvsResult TvsResult;

typedef struct TvsSolverParams {
  double c;
  double delta;
  size_t max_iters;
} TvsSolverParams;

/**
 * Class-size constraint. `lower` and `upper` point to `n_classes` values
 * and may be null when the mode does not use them.
 */
typedef struct TvsSizeSpec {
  enum TvsSizeMode mode;
  const double *lower;
  const double *upper;
  double gamma;
} TvsSizeSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * Valid until the next call into the library from the same thread.
 */
const char *tvs_last_error_message(void);

/**
 * Library version as a static string.
 */
const char *tvs_version(void);

struct TvsSolverParams tvs_solver_params_default(void);

/**
 * Symmetric kNN graph of `n` points with `dim` coordinates each.
 *
 * # Safety
 * `points` must hold `n * dim` values and `out` must be writable.
 */
enum TvsStatus tvs_graph_build_knn(const double *points,
                                   size_t n,
                                   size_t dim,
                                   size_t k,
                                   enum TvsWeightKind kind,
                                   double sigma,
                                   size_t m,
                                   struct TvsGraph **out);

/**
 * Graph from `n_edges` undirected edges `(src[e], dst[e], weight[e])`.
 *
 * # Safety
 * The three arrays must hold `n_edges` values and `out` must be writable.
 */
enum TvsStatus tvs_graph_from_edges(size_t n_nodes,
                                    const size_t *src,
                                    const size_t *dst,
                                    const double *weight,
                                    size_t n_edges,
                                    struct TvsGraph **out);

/**
 * Number of nodes; 0 for a null handle.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t tvs_graph_n_nodes(const struct TvsGraph *g);

/**
 * Number of directed edges (twice the undirected count); 0 for null.
 *
 * # Safety
 * `g` must be null or a live handle.
 */
size_t tvs_graph_n_edges(const struct TvsGraph *g);

/**
 * # Safety
 * `g` must be null or a handle not freed before.
 */
void tvs_graph_free(struct TvsGraph *g);

/**
 * Fills the `n_nodes × n_classes` cost matrix `out` with `eta` where a
 * supervised node would take a class other than its own and 0 elsewhere.
 * A non-finite `eta` forbids those classes outright.
 *
 * # Safety
 * `nodes` and `classes` must hold `n_supervised` values and `out` must
 * hold `n_nodes * n_classes`.
 */
enum TvsStatus tvs_supervision_costs(size_t n_nodes,
                                     size_t n_classes,
                                     const size_t *nodes,
                                     const size_t *classes,
                                     size_t n_supervised,
                                     double eta,
                                     double *out);

/**
 * Minimizes costs plus total variation over `g`.
 *
 * `costs` is `n_nodes × n_classes`, row-major, `+inf` marking forbidden
 * classes. `size` and `params` may be null for no constraint and default
 * parameters.
 *
 * # Safety
 * `g` must be a live handle, `costs` must hold `n_nodes * n_classes`
 * values, `size` and `params` must be null or valid, `out` writable.
 */
enum TvsStatus tvs_solve(const struct TvsGraph *g,
                         const double *costs,
                         size_t n_classes,
                         const struct TvsSizeSpec *size,
                         const struct TvsSolverParams *params,
                         struct TvsResult **out);

/**
 * Copies the `n_nodes` hard labels into `out`.
 *
 * # Safety
 * `r` must be a live handle and `out` must hold `len` values.
 */
enum TvsStatus tvs_result_labels(const struct TvsResult *r, size_t *out, size_t len);

/**
 * Copies the relaxed labels, `n_nodes × n_classes` row-major, into `out`.
 *
 * # Safety
 * `r` must be a live handle and `out` must hold `len` values.
 */
enum TvsStatus tvs_result_u(const struct TvsResult *r, double *out, size_t len);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t tvs_result_n_nodes(const struct TvsResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t tvs_result_n_classes(const struct TvsResult *r);

/**
 * # Safety
 * `r` must be null or a live handle.
 */
size_t tvs_result_iterations(const struct TvsResult *r);

/**
 * 1 when the stopping tolerance was reached, 0 otherwise or for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
int32_t tvs_result_converged(const struct TvsResult *r);

/**
 * Mean distance of the relaxed labels to their rounding; NaN for null.
 *
 * # Safety
 * `r` must be null or a live handle.
 */
double tvs_result_binary_difference(const struct TvsResult *r);

/**
 * # Safety
 * `r` must be null or a handle not freed before.
 */
void tvs_result_free(struct TvsResult *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TVSEG_H */
