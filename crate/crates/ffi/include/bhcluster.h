#ifndef BHCLUSTER_H
#define BHCLUSTER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Values 2-4 match the command-line exit codes.
 */
typedef enum BhStatus {
  BH_STATUS_OK = 0,
  BH_STATUS_IO = 1,
  BH_STATUS_CONFIG = 2,
  BH_STATUS_RESOURCE_CAP = 3,
  BH_STATUS_NUMERICAL = 4,
  BH_STATUS_NULL_POINTER = 5,
  BH_STATUS_INVALID_UTF8 = 6,
  BH_STATUS_PANIC = 7,
} BhStatus;

typedef enum BhCommand {
  BH_COMMAND_APPROX = 0,
  BH_COMMAND_EXACT = 1,
  BH_COMMAND_COMPARE = 2,
  BH_COMMAND_CLUSTERING = 3,
  BH_COMMAND_MOMENTS = 4,
  BH_COMMAND_KP = 5,
} BhCommand;

/**
 * A validated model instance.
 */
typedef struct BhModel BhModel;

/**
 * Result of a truncated cluster expansion.
 */
typedef struct BhReport BhReport;

/**
 * A thermal state from exact diagonalization.
 */
typedef struct BhState BhState;

/**
 * Scalar summary of a [`BhReport`].
 */
typedef struct BhReportValues {
  double f_beta;
  double log_z_w;
  double t_m;
  size_t m;
  uint32_t q;
  size_t polymer_count;
  size_t cluster_count;
  bool kp_violated;
} BhReportValues;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, e.g. `"0.1.0"`. Static storage; do not free.
 */
const char *bh_version(void);

/**
 * Version of the JSON/CSV report schema.
 */
uint32_t bh_schema_version(void);

/**
 * Message for the last failed call on this thread, or NULL.
 */
const char *bh_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void bh_string_free(char *s);

/**
 * Builds a model from the `[model]` section of a TOML document.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out` must be writable.
 */
enum BhStatus bh_model_from_toml(const char *toml, struct BhModel **out);

/**
 * Hypercubic lattice with couplings `g / (1 + d)^alpha` and uniform `U`, `mu`.
 *
 * # Safety
 * `dims` must point to `n_dims` extents; `out` must be writable.
 */
enum BhStatus bh_model_long_range(const size_t *dims,
                                  size_t n_dims,
                                  bool periodic,
                                  double g,
                                  double alpha,
                                  double u,
                                  double mu,
                                  double beta,
                                  struct BhModel **out);

/**
 * Hypercubic lattice with coupling `g` up to graph distance `cutoff`.
 *
 * # Safety
 * `dims` must point to `n_dims` extents; `out` must be writable.
 */
enum BhStatus bh_model_finite_range(const size_t *dims,
                                    size_t n_dims,
                                    bool periodic,
                                    double g,
                                    size_t cutoff,
                                    double u,
                                    double mu,
                                    double beta,
                                    struct BhModel **out);

/**
 * Open chain of `n` sites with an explicit symmetric `n x n` coupling matrix
 * (row-major) and per-site `U`, `mu`.
 *
 * # Safety
 * `matrix` must hold `n * n` values, `u` and `mu` `n` values each.
 */
enum BhStatus bh_model_explicit(size_t n,
                                const double *matrix,
                                const double *u,
                                const double *mu,
                                double beta,
                                struct BhModel **out);

/**
 * Number of sites, or 0 for NULL.
 *
 * # Safety
 * `model` must be NULL or a live handle.
 */
size_t bh_model_num_sites(const struct BhModel *model);

/**
 * # Safety
 * `model` must be NULL or a live handle; it is invalid afterwards.
 */
void bh_model_free(struct BhModel *model);

/**
 * Truncated cluster expansion at order `m` and cutoff `q`. `workers = 0`
 * uses the default thread pool.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_approximate(const struct BhModel *model,
                             size_t m,
                             uint32_t q,
                             size_t workers,
                             struct BhReport **out);

/**
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_report_values(const struct BhReport *report, struct BhReportValues *out);

/**
 * Contribution of clusters with total size `order` (1-based).
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_report_order(const struct BhReport *report, size_t order, double *out);

/**
 * The report as JSON; free with `bh_string_free`.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_report_to_json(const struct BhReport *report, char **out);

/**
 * # Safety
 * `report` must be NULL or a live handle; it is invalid afterwards.
 */
void bh_report_free(struct BhReport *report);

/**
 * Exact thermal state at cutoff `q`, refusing Hilbert spaces larger than
 * `dimension_cap`.
 *
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_thermalize(const struct BhModel *model,
                            uint32_t q,
                            size_t dimension_cap,
                            struct BhState **out);

/**
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_state_log_z(const struct BhState *state, double *out);

/**
 * `<n_site^l>`.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_state_moment(const struct BhState *state, size_t site, uint32_t l, double *out);

/**
 * Writes `p_0..p_q` for `site`; `len` must be `q + 1`.
 *
 * # Safety
 * `state` must be a live handle; `buf` must hold `len` values.
 */
enum BhStatus bh_state_occupation(const struct BhState *state,
                                  size_t site,
                                  double *buf,
                                  size_t len);

/**
 * Connected correlation `C(a_i^dag, a_j)` for `i != j`.
 *
 * # Safety
 * `state` must be a live handle; `out` must be writable.
 */
enum BhStatus bh_state_hopping_correlation(const struct BhState *state,
                                           size_t i,
                                           size_t j,
                                           double *out);

/**
 * `I(A:B)` for a bipartition of the lattice.
 *
 * # Safety
 * `a` and `b` must hold `na` and `nb` site indices; `out` must be writable.
 */
enum BhStatus bh_state_mutual_information(const struct BhState *state,
                                          const size_t *a,
                                          size_t na,
                                          const size_t *b,
                                          size_t nb,
                                          size_t dimension_cap,
                                          double *out);

/**
 * # Safety
 * `state` must be NULL or a live handle; it is invalid afterwards.
 */
void bh_state_free(struct BhState *state);

/**
 * Runs a command-line subcommand on a TOML configuration held in memory and
 * returns the rendered document (JSON or CSV per `[output] format`). The
 * `[output] path` key is ignored. Free the result with `bh_string_free`.
 *
 * # Safety
 * `config_toml` must be a NUL-terminated string; `out` must be writable.
 */
enum BhStatus bh_run(enum BhCommand command, const char *config_toml, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BHCLUSTER_H */
