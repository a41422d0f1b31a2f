#ifndef PPSQ_H
#define PPSQ_H

#include <stddef.h>
#include <stdint.h>

/**
 * Result codes shared by every function in this API.
 */
typedef enum PpsqStatus {
  PPSQ_STATUS_OK = 0,
  PPSQ_STATUS_NULL_POINTER = 1,
  PPSQ_STATUS_INVALID_UTF8 = 2,
  PPSQ_STATUS_INVALID_ARGUMENT = 3,
  PPSQ_STATUS_PARSE = 4,
  PPSQ_STATUS_IO = 5,
  PPSQ_STATUS_UNKNOWN_NAME = 6,
  PPSQ_STATUS_POST_SELECTION_IMPOSSIBLE = 7,
  PPSQ_STATUS_COUNTERFACTUAL_INVALID = 8,
  PPSQ_STATUS_INCONSISTENT_FAMILY = 9,
  PPSQ_STATUS_CONDITIONING_ON_NULL = 10,
  PPSQ_STATUS_INTERNAL = 11,
} PpsqStatus;

/**
 * Opaque scenario handle.
 */
typedef struct PpsqScenario PpsqScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Creates a built-in scenario (`"three-box"` or `"n-box:<n>"`).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PpsqStatus ppsq_scenario_builtin(const char *name, struct PpsqScenario **out);

/**
 * Parses a scenario from its JSON document.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PpsqStatus ppsq_scenario_from_json(const char *json, struct PpsqScenario **out);

/**
 * Releases a handle. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void ppsq_scenario_free(struct PpsqScenario *s);

/**
 * # Safety
 * `s` must be a live handle; `out` must be writable.
 */
enum PpsqStatus ppsq_scenario_dim(const struct PpsqScenario *s, size_t *out);

/**
 * ABL probability of `outcome` for the measured observable `observable`.
 *
 * # Safety
 * `s` must be a live handle, strings NUL-terminated, `out` writable.
 */
enum PpsqStatus ppsq_abl_probability(const struct PpsqScenario *s,
                                     const char *observable,
                                     const char *outcome,
                                     double *out);

/**
 * ABL query that records which observable was measured. On success
 * `counterfactual` is 1 for a certified counterfactual answer and 0 when the
 * queried outcome was actually measured.
 *
 * # Safety
 * `s` must be a live handle, strings NUL-terminated, out-pointers writable.
 */
enum PpsqStatus ppsq_contextual_abl(const struct PpsqScenario *s,
                                    const char *measured,
                                    const char *queried,
                                    const char *outcome,
                                    double *probability,
                                    int32_t *counterfactual);

/**
 * Consistency check of the family built from one or more observables
 * (merged when `count > 1`).
 *
 * # Safety
 * `names` must point to `count` NUL-terminated strings; out-pointers writable.
 */
enum PpsqStatus ppsq_consistency(const struct PpsqScenario *s,
                                 const char *const *names,
                                 size_t count,
                                 int32_t *consistent,
                                 double *max_violation);

/**
 * Runs a seeded ensemble and returns the same JSON document as the
 * `simulate` subcommand. Free the result with `ppsq_string_free`.
 *
 * # Safety
 * `s` must be a live handle, `open` NUL-terminated, `out_json` writable.
 */
enum PpsqStatus ppsq_simulate_json(const struct PpsqScenario *s,
                                   const char *open,
                                   uint64_t runs,
                                   uint64_t seed,
                                   char **out_json);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `p` must come from this library and not be freed twice.
 */
void ppsq_string_free(char *p);

/**
 * Message for the most recent failure on this thread, or null. The pointer
 * stays valid until the next API call on the same thread.
 */
const char *ppsq_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PPSQ_H */
