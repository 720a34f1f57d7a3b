/* C ABI for the sqnkit stochastic damped L-BFGS toolkit. */

#ifndef SQNKIT_H
#define SQNKIT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible call.
 */
typedef enum SqnStatus {
  SQN_STATUS_OK = 0,
  SQN_STATUS_NULL_ARGUMENT = 1,
  SQN_STATUS_INVALID_ARGUMENT = 2,
  SQN_STATUS_PARSE_ERROR = 3,
  SQN_STATUS_IO_ERROR = 4,
  SQN_STATUS_NUMERIC_ERROR = 5,
  SQN_STATUS_INDEX_ERROR = 6,
  SQN_STATUS_UTF8_ERROR = 7,
  SQN_STATUS_INTERNAL_ERROR = 8,
} SqnStatus;

/**
 * Solver family.
 */
typedef enum SqnAlgorithm {
  SQN_ALGORITHM_SGD = 0,
  SQN_ALGORITHM_SDLBFGS = 1,
  SQN_ALGORITHM_SVRG = 2,
  SQN_ALGORITHM_SDLBFGS_VR = 3,
} SqnAlgorithm;

/**
 * Step-size schedule kind.
 */
typedef enum SqnStepKind {
  /**
   * `alpha_k = base / k`.
   */
  SQN_STEP_KIND_DIMINISHING = 0,
  /**
   * `alpha_k = base`.
   */
  SQN_STEP_KIND_CONSTANT = 1,
} SqnStepKind;

/**
 * Opaque labeled dataset handle.
 */
typedef struct SqnDataset SqnDataset;

/**
 * Opaque run-trace handle.
 */
typedef struct SqnTrace SqnTrace;

/**
 * Flat solver options consumed by [`sqn_run`].
 */
typedef struct SqnSolverOptions {
  enum SqnAlgorithm algorithm;
  uint64_t seed;
  uintptr_t batch_size;
  /**
   * Curvature-pair memory p (ignored by sgd/svrg).
   */
  uintptr_t memory;
  /**
   * Scaling floor delta.
   */
  double delta;
  enum SqnStepKind step_kind;
  double step_base;
  /**
   * Iterations for sgd/sdlbfgs.
   */
  uint64_t max_iters;
  /**
   * Outer epochs for the variance-reduced kinds.
   */
  uint64_t epochs;
  /**
   * Inner steps per epoch for the variance-reduced kinds.
   */
  uint64_t inner_iters;
  uint64_t eval_every;
  /**
   * l2 regularization weight.
   */
  double lambda;
} SqnSolverOptions;

/**
 * One evaluation record, mirroring a trace CSV row.
 */
typedef struct SqnTraceRecord {
  uint64_t iteration;
  double step_size;
  double sng;
  double objective;
  double accuracy;
  uint64_t sfo_total;
  int32_t damped_step;
  int32_t negative_curvature;
} SqnTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * ABI version; bump on any breaking change to this header.
 */
uint32_t sqn_abi_version(void);

/**
 * Message for the most recent failure on this thread. Never null; empty
 * when nothing failed yet. Valid until the next failing call.
 */
const char *sqn_last_error_message(void);

/**
 * Loads a dataset from the sparse text format.
 *
 * # Safety
 * `path` must be a valid NUL-terminated string and `out` a valid pointer.
 */
enum SqnStatus sqn_dataset_load(const char *path, struct SqnDataset **out);

/**
 * Generates a synthetic planted-model dataset (labels from a hidden
 * hyperplane, `round(density * n)` nonzeros per sample).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SqnStatus sqn_dataset_generate(uint64_t seed,
                                    uintptr_t n,
                                    uintptr_t count,
                                    double density,
                                    struct SqnDataset **out);

/**
 * Writes a dataset in the sparse text format.
 *
 * # Safety
 * `dataset` must come from this library; `path` must be valid.
 */
enum SqnStatus sqn_dataset_save(const struct SqnDataset *dataset, const char *path);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from this library.
 */
uintptr_t sqn_dataset_len(const struct SqnDataset *dataset);

/**
 * Feature dimension, or 0 for a null handle.
 *
 * # Safety
 * `dataset` must be null or a live handle from this library.
 */
uintptr_t sqn_dataset_dim(const struct SqnDataset *dataset);

/**
 * Releases a dataset handle (null is a no-op).
 *
 * # Safety
 * `dataset` must be null or an unreleased handle from this library.
 */
void sqn_dataset_free(struct SqnDataset *dataset);

/**
 * Fills `out` with the benchmark defaults (sdlbfgs, p=10, m=100,
 * alpha_k = 10/k, 1000 iterations, lambda = 1e-4).
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum SqnStatus sqn_solver_options_default(struct SqnSolverOptions *out);

/**
 * Trains on `train`, evaluating SNG/accuracy on `test`, and returns a
 * trace handle.
 *
 * # Safety
 * All pointers must be valid; dataset handles must come from this library.
 */
enum SqnStatus sqn_run(const struct SqnDataset *train,
                       const struct SqnDataset *test,
                       const struct SqnSolverOptions *options,
                       struct SqnTrace **out);

/**
 * Number of evaluation records in the trace.
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
uintptr_t sqn_trace_len(const struct SqnTrace *trace);

/**
 * Copies record `index` into `out`.
 *
 * # Safety
 * `trace` and `out` must be valid pointers.
 */
enum SqnStatus sqn_trace_record(const struct SqnTrace *trace,
                                uintptr_t index,
                                struct SqnTraceRecord *out);

/**
 * Total component-gradient evaluations spent by the run.
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
uint64_t sqn_trace_sfo_total(const struct SqnTrace *trace);

/**
 * Number of damped curvature updates (theta < 1).
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
uint64_t sqn_trace_damped_steps(const struct SqnTrace *trace);

/**
 * Number of steps whose raw curvature s'y was negative.
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
uint64_t sqn_trace_negative_curvature_steps(const struct SqnTrace *trace);

/**
 * 1 when the run tripped the divergence sentinel.
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
int32_t sqn_trace_diverged(const struct SqnTrace *trace);

/**
 * Dimension of the final iterate.
 *
 * # Safety
 * `trace` must be null or a live handle from this library.
 */
uintptr_t sqn_trace_solution_dim(const struct SqnTrace *trace);

/**
 * Copies the final iterate into `out` (length `len` must match).
 *
 * # Safety
 * `trace` must be valid; `out` must point to at least `len` doubles.
 */
enum SqnStatus sqn_trace_solution(const struct SqnTrace *trace, double *out, uintptr_t len);

/**
 * Releases a trace handle (null is a no-op).
 *
 * # Safety
 * `trace` must be null or an unreleased handle from this library.
 */
void sqn_trace_free(struct SqnTrace *trace);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SQNKIT_H */
