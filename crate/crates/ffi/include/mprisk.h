#ifndef MPRISK_H
#define MPRISK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

enum MprStatus
#if defined(__cplusplus) || __STDC_VERSION__ >= 202311L
  : int32_t
#endif // defined(__cplusplus) || __STDC_VERSION__ >= 202311L
 {
  MPR_STATUS_OK = 0,
  MPR_STATUS_NULL_ARGUMENT = 1,
  MPR_STATUS_INVALID_UTF8 = 2,
  MPR_STATUS_DATA_ERROR = 3,
  MPR_STATUS_NUMERICAL_ERROR = 4,
  MPR_STATUS_INTERNAL_ERROR = 5,
  MPR_STATUS_UNKNOWN_NODE = 6,
  MPR_STATUS_INVALID_FEATURE = 7,
  // The feature is undefined for this node (no path instances or a zero
  // denominator); the output is left untouched.
  MPR_STATUS_MISSING_VALUE = 8,
  MPR_STATUS_INVALID_ARGUMENT = 9,
};
#ifndef __cplusplus
#if __STDC_VERSION__ >= 202311L
typedef enum MprStatus MprStatus;
#else
typedef int32_t MprStatus;
#endif // __STDC_VERSION__ >= 202311L
#endif // __cplusplus

// Opaque network handle with its current risk assignment.
typedef struct MprHin MprHin;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads `nodes.csv`, `edges.csv` and the optional `attributes.csv` and
// `labels.csv` from `dir` over the default SME schema.
//
// # Safety
// `dir` must be a NUL-terminated string and `out` a valid pointer.
MprStatus mpr_hin_load(const char *dir, struct MprHin **out);

// Generates a synthetic network of roughly `total_nodes` nodes.
//
// # Safety
// `out` must be a valid pointer.
MprStatus mpr_hin_synthetic(uint64_t seed, size_t total_nodes, struct MprHin **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `hin` must come from this library and not be used afterwards.
void mpr_hin_free(struct MprHin *hin);

// # Safety
// `hin` must be a live handle or null (which yields 0).
size_t mpr_hin_node_count(const struct MprHin *hin);

// # Safety
// `hin` must be a live handle or null (which yields 0).
size_t mpr_hin_edge_count(const struct MprHin *hin);

// Fits the Naive Bayes risk models and imputes unlabeled nodes whose
// posterior exceeds `threshold`. Later feature calls use the result.
//
// # Safety
// `hin` must be a live handle.
MprStatus mpr_hin_infer_risk(struct MprHin *hin, double alpha, double threshold);

// One feature cell. `feature` is `<meta path>@<kind>`, for example
// `E-[control]->P@hetesim`.
//
// # Safety
// Pointers must be valid; strings NUL-terminated.
MprStatus mpr_feature(const struct MprHin *hin,
                      const char *node_id,
                      const char *feature,
                      double *out);

// Candidate meta paths from enterprises, newline separated, shortest
// first. Free the result with `mpr_string_free`.
//
// # Safety
// `hin` must be a live handle and `out` a valid pointer.
MprStatus mpr_candidate_paths(const struct MprHin *hin,
                              size_t max_relations,
                              size_t cap,
                              char **out);

// ROC AUC of `scores` against 0/1 `labels`.
//
// # Safety
// `scores` and `labels` must point to `n` elements; `out` must be valid.
MprStatus mpr_roc_auc(const double *scores, const uint8_t *labels, size_t n, double *out);

// Upper tail of the chi-square distribution with one degree of freedom.
//
// # Safety
// `out` must be valid.
MprStatus mpr_chi2_sf_1(double w, double *out);

// Message for the last failure on this thread, or null. Valid until the
// next library call on the same thread; do not free.
const char *mpr_last_error(void);

// # Safety
// `s` must come from this library or be null.
void mpr_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPRISK_H */
