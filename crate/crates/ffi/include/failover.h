#ifndef FAILOVER_H
#define FAILOVER_H

/* Generated by cbindgen from the failover-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FoStatus {
  FO_STATUS_OK = 0,
  /**
   * No assignment satisfies the constraints.
   */
  FO_STATUS_INFEASIBLE = 1,
  FO_STATUS_INVALID_ARGUMENT = 2,
  FO_STATUS_PARSE_ERROR = 3,
  FO_STATUS_IO_ERROR = 4,
  /**
   * Search budget ran out without a feasible solution.
   */
  FO_STATUS_INCONCLUSIVE = 5,
  FO_STATUS_NULL_POINTER = 6,
  FO_STATUS_PANIC = 7,
} FoStatus;

typedef enum FoAlgorithm {
  FO_ALGORITHM_EXACT = 0,
  FO_ALGORITHM_RETROFLOW = 1,
  FO_ALGORITHM_NEAREST = 2,
} FoAlgorithm;

typedef struct FoInstance FoInstance;

typedef struct FoSolution FoSolution;

typedef struct FoWorld FoWorld;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call; never null.
 */
const char *fo_last_error(void);

/**
 * Library version as a static string.
 */
const char *fo_version(void);

/**
 * Loads a topology and placement from TOML text. Passing null for both
 * selects the bundled AttMpls network and its six-controller placement.
 *
 * # Safety
 * String arguments must be null or NUL-terminated; `out` must be writable.
 */
enum FoStatus fo_world_load(const char *topology_toml,
                            const char *placement_toml,
                            struct FoWorld **out);

/**
 * Builds the instance for the failure of `failed[0..n_failed]`.
 *
 * # Safety
 * `world` must come from [`fo_world_load`]; `failed` must point to
 * `n_failed` ids; `out` must be writable.
 */
enum FoStatus fo_instance_build(const struct FoWorld *world,
                                const uint32_t *failed,
                                size_t n_failed,
                                double q_fraction,
                                struct FoInstance **out);

/**
 * # Safety
 * `json` must be NUL-terminated; `out` must be writable.
 */
enum FoStatus fo_instance_from_json(const char *json, struct FoInstance **out);

/**
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum FoStatus fo_instance_to_json(const struct FoInstance *inst, char **out);

/**
 * Offline switches, active controllers, flows and required flow count.
 *
 * # Safety
 * `inst` must be a live handle; the out pointers must be writable.
 */
enum FoStatus fo_instance_dims(const struct FoInstance *inst,
                               size_t *n,
                               size_t *m,
                               size_t *l,
                               uint32_t *q);

/**
 * Solves with `algorithm` (an [`FoAlgorithm`] value). Returns
 * `FO_STATUS_INFEASIBLE` with `*out` null when the exact solver proves
 * infeasibility.
 *
 * # Safety
 * `inst` must be a live handle; `out` must be writable.
 */
enum FoStatus fo_solve(const struct FoInstance *inst,
                       uint32_t algorithm,
                       uint64_t max_nodes,
                       uint64_t time_limit_ms,
                       struct FoSolution **out);

/**
 * # Safety
 * `sol` must be a live handle; `out` must be writable.
 */
enum FoStatus fo_solution_objective(const struct FoSolution *sol, double *out);

/**
 * Writes, per offline switch, the index of its controller or -1 for
 * legacy mode. `len` must equal the switch count.
 *
 * # Safety
 * `sol` must be a live handle; `out` must hold `len` entries.
 */
enum FoStatus fo_solution_assignment(const struct FoSolution *sol, int32_t *out, size_t len);

/**
 * # Safety
 * `sol` must be a live handle; `out` must be writable.
 */
enum FoStatus fo_solution_to_json(const struct FoSolution *sol, char **out);

/**
 * Sets `*feasible` to 1 when `sol` meets every constraint of `inst`, else 0.
 *
 * # Safety
 * Both handles must be live; `feasible` must be writable.
 */
enum FoStatus fo_validate(const struct FoInstance *inst,
                          const struct FoSolution *sol,
                          int32_t *feasible);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void fo_string_free(char *s);

/**
 * # Safety
 * `w` must be null or a live handle, freed once.
 */
void fo_world_free(struct FoWorld *w);

/**
 * # Safety
 * `i` must be null or a live handle, freed once.
 */
void fo_instance_free(struct FoInstance *i);

/**
 * # Safety
 * `s` must be null or a live handle, freed once.
 */
void fo_solution_free(struct FoSolution *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FAILOVER_H */
