#ifndef FAIRCLUST_H
#define FAIRCLUST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/*
 Result code of every fallible call.
 */
typedef enum FcStatus {
  FC_STATUS_OK = 0,
  FC_STATUS_NULL_POINTER = 1,
  FC_STATUS_INVALID_ARGUMENT = 2,
  FC_STATUS_DIMENSION_MISMATCH = 3,
  FC_STATUS_INVALID_CONFIG = 4,
  FC_STATUS_INVALID_PARTITION = 5,
  FC_STATUS_INVALID_GRAPH = 6,
  /*
   Non-finite energy or an update that left the simplex.
   */
  FC_STATUS_NUMERICAL = 7,
  FC_STATUS_BUFFER_TOO_SMALL = 8,
  FC_STATUS_PANIC = 9,
  FC_STATUS_INTERNAL = 10,
} FcStatus;

/*
 Values accepted in [`FcProblemDesc::objective`].
 */
typedef enum FcObjective {
  FC_OBJECTIVE_KMEANS = 0,
  FC_OBJECTIVE_KMEDIAN = 1,
  FC_OBJECTIVE_NCUT = 2,
} FcObjective;

/*
 Values accepted in [`FcProblemDesc::metric`].
 */
typedef enum FcMetric {
  FC_METRIC_EUCLIDEAN = 0,
  FC_METRIC_MANHATTAN = 1,
  FC_METRIC_CHEBYSHEV = 2,
} FcMetric;

/*
 Opaque clustering problem with its demographic partition.
 */
typedef struct FcProblem FcProblem;

/*
 Opaque solver output.
 */
typedef struct FcResult FcResult;

/*
 Solver settings; start from [`fc_config_default`].
 */
typedef struct FcConfig {
  double lambda;
  double lipschitz_l;
  double inner_tol;
  double outer_tol;
  size_t max_inner;
  size_t max_outer;
  uint64_t rng_seed;
  double marginal_floor;
  bool reinit_each_outer;
} FcConfig;

/*
 Input description for [`fc_problem_new`]. The arrays are copied.
 */
typedef struct FcProblemDesc {
  /*
   One of `FcObjective`.
   */
  uint32_t objective;
  /*
   One of `FcMetric`; used by K-median only.
   */
  uint32_t metric;
  /*
   `n_points * n_features` values, row-major.
   */
  const double *features;
  size_t n_points;
  size_t n_features;
  size_t n_clusters;
  /*
   Group index of every point, each below `n_groups`.
   */
  const uint32_t *groups;
  size_t n_groups;
  /*
   `n_groups` target proportions, or NULL for the dataset's own.
   */
  const double *targets;
  /*
   Neighbors per point of the Ncut affinity graph.
   */
  size_t knn;
} FcProblemDesc;

/*
 Quality measures of a finished run.
 */
typedef struct FcMetrics {
  double discrete_objective;
  double fairness_error;
  double min_balance;
  size_t outer_iterations;
  size_t inner_iterations;
  size_t monotonicity_violations;
} FcMetrics;

/*
 Energy after one outer iteration. `auxiliary` is NaN when unknown.
 */
typedef struct FcEnergy {
  size_t outer;
  double total;
  double clustering;
  double fairness;
  double auxiliary;
} FcEnergy;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *fc_version(void);

/*
 Message of the last failed call on this thread, or NULL after a success.
 The pointer stays valid until the next call into the library on this
 thread.
 */
const char *fc_last_error_message(void);

/*
 Default solver settings.
 */
struct FcConfig fc_config_default(void);

/*
 Builds a problem from `desc` and stores the handle in `*out`.

 # Safety
 `desc` and `out` must be valid pointers and the arrays in `desc` must
 hold the sizes it declares.
 */
enum FcStatus fc_problem_new(const struct FcProblemDesc *desc, struct FcProblem **out);

/*
 Releases a problem. NULL is ignored.

 # Safety
 `problem` must be NULL or a handle from [`fc_problem_new`] that has not
 been freed.
 */
void fc_problem_free(struct FcProblem *problem);

/*
 K-means++ initial labels for the problem's features, written to
 `labels[0..n_points]`.

 # Safety
 `problem` must be a live handle and `labels` must hold `len` values.
 */
enum FcStatus fc_kmeanspp_seed(const struct FcProblem *problem,
                               uint64_t seed,
                               uint32_t *labels,
                               size_t len);

/*
 Runs the solver from `init_labels` and stores the result handle in
 `*out`. A NULL `config` means [`fc_config_default`].

 # Safety
 `problem` must be a live handle, `init_labels` must hold `n_labels`
 values, `config` must be NULL or valid and `out` must be writable.
 */
enum FcStatus fc_solve(const struct FcProblem *problem,
                       const uint32_t *init_labels,
                       size_t n_labels,
                       const struct FcConfig *config,
                       struct FcResult **out);

/*
 Releases a result. NULL is ignored.

 # Safety
 `result` must be NULL or a handle from [`fc_solve`] that has not been
 freed.
 */
void fc_result_free(struct FcResult *result);

/*
 Number of points and clusters of a result; either out-pointer may be NULL.

 # Safety
 `result` must be a live handle.
 */
enum FcStatus fc_result_shape(const struct FcResult *result, size_t *n_points, size_t *n_clusters);

/*
 Final hard labels, written to `labels[0..n_points]`.

 # Safety
 `result` must be a live handle and `labels` must hold `len` values.
 */
enum FcStatus fc_result_labels(const struct FcResult *result, uint32_t *labels, size_t len);

/*
 Final soft assignment, `n_points * n_clusters` values row-major.

 # Safety
 `result` must be a live handle and `probs` must hold `len` values.
 */
enum FcStatus fc_result_soft(const struct FcResult *result, double *probs, size_t len);

/*
 # Safety
 `result` must be a live handle and `metrics` writable.
 */
enum FcStatus fc_result_metrics(const struct FcResult *result, struct FcMetrics *metrics);

/*
 Number of entries in the energy trace; 0 for NULL.

 # Safety
 `result` must be NULL or a live handle.
 */
size_t fc_result_trace_len(const struct FcResult *result);

/*
 Energy trace, one entry per outer iteration.

 # Safety
 `result` must be a live handle and `trace` must hold `len` entries.
 */
enum FcStatus fc_result_trace(const struct FcResult *result, struct FcEnergy *trace, size_t len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAIRCLUST_H */
