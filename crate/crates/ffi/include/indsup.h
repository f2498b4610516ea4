#ifndef INDSUP_H
#define INDSUP_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum IndsupStatus {
  INDSUP_STATUS_OK = 0,
  INDSUP_STATUS_NULL_POINTER = 1,
  INDSUP_STATUS_INVALID_UTF8 = 2,
  INDSUP_STATUS_CONFIG = 3,
  INDSUP_STATUS_BAD_PARAMS = 4,
  /**
   * Probabilities or lengths do not describe valid distributions.
   */
  INDSUP_STATUS_INVALID_INPUT = 5,
  INDSUP_STATUS_NO_WRONG_HYPOTHESIS = 6,
  INDSUP_STATUS_CAP_EXCEEDED = 7,
  INDSUP_STATUS_UNBOUNDED_LOSS = 8,
  INDSUP_STATUS_IO = 9,
  INDSUP_STATUS_PANIC = 10,
} IndsupStatus;

/**
 * A sampled dataset of `(x, o)` index pairs.
 */
typedef struct IndsupDataset IndsupDataset;

/**
 * A parsed scenario together with the config it came from.
 */
typedef struct IndsupScenario IndsupScenario;

/**
 * Sizes of a scenario's spaces and classes.
 */
typedef struct IndsupShape {
  size_t instances;
  size_t labels;
  size_t outcomes;
  size_t hypotheses;
  size_t transitions;
} IndsupShape;

/**
 * Outcome of empirical risk minimization.
 */
typedef struct IndsupErm {
  size_t h_index;
  size_t t_index;
  double empirical_risk;
  double classification_risk;
  size_t ties;
} IndsupErm;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *indsup_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *indsup_version(void);

/**
 * Parses a TOML scenario config and builds the scenario.
 *
 * # Safety
 * `toml` is a NUL-terminated string; `out` is writable.
 */
enum IndsupStatus indsup_scenario_from_toml(const char *toml, struct IndsupScenario **out);

/**
 * # Safety
 * `scenario` is null or came from [`indsup_scenario_from_toml`] and has
 * not been freed.
 */
void indsup_scenario_free(struct IndsupScenario *scenario);

/**
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_scenario_shape(const struct IndsupScenario *scenario,
                                        struct IndsupShape *out);

/**
 * Separation degree `γ`.
 *
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_separation_degree(const struct IndsupScenario *scenario, double *out);

/**
 * Concentration degree `γ_C`; the scenario must use the concentration loss.
 *
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_concentration_degree(const struct IndsupScenario *scenario, double *out);

/**
 * Identifiability level `η` by full enumeration.
 *
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_identifiability_level(const struct IndsupScenario *scenario, double *out);

/**
 * The separation report as JSON, the same document the `separation`
 * command writes. Free the string with [`indsup_string_free`].
 *
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_separation_report_json(const struct IndsupScenario *scenario, char **out);

/**
 * # Safety
 * `s` is null or a string returned by this library, not yet freed.
 */
void indsup_string_free(char *s);

/**
 * Draws `m` samples with the given seed.
 *
 * # Safety
 * `scenario` is a live handle; `out` is writable.
 */
enum IndsupStatus indsup_dataset_sample(const struct IndsupScenario *scenario,
                                        size_t m,
                                        uint64_t seed,
                                        struct IndsupDataset **out);

/**
 * # Safety
 * `dataset` is null or came from [`indsup_dataset_sample`] and has not
 * been freed.
 */
void indsup_dataset_free(struct IndsupDataset *dataset);

/**
 * Number of samples; zero for a null handle.
 *
 * # Safety
 * `dataset` is null or a live handle.
 */
size_t indsup_dataset_len(const struct IndsupDataset *dataset);

/**
 * Sample `k` as instance and outcome indices.
 *
 * # Safety
 * `dataset` is a live handle; `x` and `o` are writable.
 */
enum IndsupStatus indsup_dataset_get(const struct IndsupDataset *dataset,
                                     size_t k,
                                     size_t *x,
                                     size_t *o);

/**
 * Empirical risk minimization over the scenario's `H × T`.
 *
 * # Safety
 * `scenario` and `dataset` are live handles; `out` is writable.
 */
enum IndsupStatus indsup_erm(const struct IndsupScenario *scenario,
                             const struct IndsupDataset *dataset,
                             struct IndsupErm *out);

/**
 * `KL(p || q)` of two weight vectors, each normalized first.
 *
 * # Safety
 * `p` and `q` point to `len` readable doubles; `out` is writable.
 */
enum IndsupStatus indsup_kl(const double *p, const double *q, size_t len, double *out);

/**
 * Total variation distance of two weight vectors, each normalized first.
 *
 * # Safety
 * `p` and `q` point to `len` readable doubles; `out` is writable.
 */
enum IndsupStatus indsup_total_variation(const double *p, const double *q, size_t len, double *out);

/**
 * `ln(2 Σ_{j ≤ min(d, m)} C(m, j))`.
 *
 * # Safety
 * `out` is writable.
 */
enum IndsupStatus indsup_gamma_bar(uint64_t m, uint64_t d, double *out);

/**
 * The generalization bound on the classification risk of ERM.
 *
 * # Safety
 * `out` is writable.
 */
enum IndsupStatus indsup_theorem_bound(double b,
                                       double eta,
                                       uint64_t d,
                                       uint64_t m,
                                       double delta,
                                       double *out);

/**
 * Upper bound on the weak VC-major dimension from the Natarajan and
 * transition dimensions.
 *
 * # Safety
 * `out` is writable.
 */
enum IndsupStatus indsup_dimension_bound(uint64_t d_h, uint64_t d_t, size_t labels, uint64_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* INDSUP_H */
