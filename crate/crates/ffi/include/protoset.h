#ifndef PROTOSET_H
#define PROTOSET_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum ProtosetStatus {
  PROTOSET_STATUS_OK = 0,
  PROTOSET_STATUS_NULL_POINTER = 1,
  PROTOSET_STATUS_INVALID_ARGUMENT = 2,
  PROTOSET_STATUS_DATA_ERROR = 3,
  PROTOSET_STATUS_NUMERICAL_ERROR = 4,
  PROTOSET_STATUS_IO_ERROR = 5,
  PROTOSET_STATUS_PANIC = 6,
} ProtosetStatus;

typedef enum ProtosetMetric {
  PROTOSET_METRIC_SQUARED_L2 = 0,
  PROTOSET_METRIC_L1 = 1,
  PROTOSET_METRIC_EMD1 = 2,
  PROTOSET_METRIC_EMD2 = 3,
} ProtosetMetric;

/**
 * Opaque coreset handle.
 */
typedef struct ProtosetCoreset ProtosetCoreset;

/**
 * Opaque instance handle.
 */
typedef struct ProtosetInstance ProtosetInstance;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. Valid until the
 * next failing call on the same thread.
 */
const char *protoset_last_error(void);

/**
 * Parses `sq`, `l1`, `emd1` or `emd2`.
 */
enum ProtosetStatus protoset_metric_from_name(const char *name, enum ProtosetMetric *out_metric);

/**
 * Exact matching cost of two unweighted `k x d` point sets.
 * `out_perm` (may be NULL) receives `k` entries: point `j` of `a` matches
 * point `out_perm[j]` of `b`.
 */
enum ProtosetStatus protoset_match_cost(size_t k,
                                        size_t d,
                                        const double *a,
                                        const double *b,
                                        enum ProtosetMetric metric,
                                        double *out_cost,
                                        size_t *out_perm);

/**
 * Earth mover's distance between two weighted point sets of equal total
 * weight. `out_flow` (may be NULL) receives the row-major `k x k` flow.
 */
enum ProtosetStatus protoset_emd(size_t k,
                                 size_t d,
                                 const double *a,
                                 const uint64_t *a_weights,
                                 const double *b,
                                 const uint64_t *b_weights,
                                 enum ProtosetMetric metric,
                                 double *out_cost,
                                 uint64_t *out_flow);

/**
 * Builds an instance of `n` patterns from `n*k*d` coordinates and, for
 * weighted data, `n*k` point weights.
 */
enum ProtosetStatus protoset_instance_new(size_t n,
                                          size_t k,
                                          size_t d,
                                          const double *coords,
                                          const uint64_t *weights,
                                          struct ProtosetInstance **out_instance);

/**
 * Reads a pattern file.
 */
enum ProtosetStatus protoset_instance_load(const char *path,
                                           struct ProtosetInstance **out_instance);

/**
 * Writes a pattern file (atomically).
 */
enum ProtosetStatus protoset_instance_save(const struct ProtosetInstance *instance,
                                           const char *path);

/**
 * `n`, `k`, `d` and total point weight (0 when unweighted).
 */
enum ProtosetStatus protoset_instance_shape(const struct ProtosetInstance *instance,
                                            size_t *out_n,
                                            size_t *out_k,
                                            size_t *out_d,
                                            uint64_t *out_total_weight);

/**
 * FNV-1a 64 fingerprint of the instance's canonical pattern file.
 */
enum ProtosetStatus protoset_instance_fingerprint(const struct ProtosetInstance *instance,
                                                  uint64_t *out_fp);

/**
 * Releases an instance; NULL is ignored.
 */
void protoset_instance_free(struct ProtosetInstance *instance);

/**
 * Picks a pivot out of `trials` random patterns, computes exact
 * sensitivities and samples `r` weighted patterns.
 */
enum ProtosetStatus protoset_coreset_build(const struct ProtosetInstance *instance,
                                           enum ProtosetMetric metric,
                                           size_t r,
                                           double alpha,
                                           size_t trials,
                                           uint64_t seed,
                                           struct ProtosetCoreset **out_coreset);

/**
 * Reads a coreset sidecar file.
 */
enum ProtosetStatus protoset_coreset_load(const char *path, struct ProtosetCoreset **out_coreset);

/**
 * Writes a coreset sidecar file (atomically).
 */
enum ProtosetStatus protoset_coreset_save(const struct ProtosetCoreset *coreset, const char *path);

/**
 * Number of sampled entries (repeats included).
 */
enum ProtosetStatus protoset_coreset_len(const struct ProtosetCoreset *coreset, size_t *out_len);

/**
 * Pattern index and weight of entry `i`.
 */
enum ProtosetStatus protoset_coreset_entry(const struct ProtosetCoreset *coreset,
                                           size_t i,
                                           size_t *out_index,
                                           double *out_weight);

/**
 * Sum of the sensitivity upper bounds `T` and the pivot index.
 */
enum ProtosetStatus protoset_coreset_summary(const struct ProtosetCoreset *coreset,
                                             double *out_total_sensitivity,
                                             size_t *out_pivot);

/**
 * Releases a coreset; NULL is ignored.
 */
void protoset_coreset_free(struct ProtosetCoreset *coreset);

/**
 * Alternating minimization from the best of `trials` random patterns,
 * on the coreset when `coreset` is non-NULL. Writes `k*d` coordinates,
 * `k` weights (weighted data, may be NULL) and the full-data objective.
 */
enum ProtosetStatus protoset_solve(const struct ProtosetInstance *instance,
                                   const struct ProtosetCoreset *coreset,
                                   enum ProtosetMetric metric,
                                   size_t trials,
                                   size_t max_rounds,
                                   double rel_tol,
                                   uint64_t seed,
                                   double *out_coords,
                                   uint64_t *out_weights,
                                   double *out_objective);

/**
 * Objective `sum_i M(P_i, Q)` of the `k x d` candidate `q` (with `k`
 * weights for weighted data).
 */
enum ProtosetStatus protoset_objective(const struct ProtosetInstance *instance,
                                       const double *q,
                                       const uint64_t *q_weights,
                                       enum ProtosetMetric metric,
                                       double *out_objective);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROTOSET_H */
