#ifndef ACX_H
#define ACX_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum {
  ACX_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  ACX_STATUS_NULL_ARGUMENT = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  ACX_STATUS_INVALID_UTF8 = 2,
  /**
   * Malformed JSON or a description that fails validation.
   */
  ACX_STATUS_INVALID_INPUT = 3,
  /**
   * Unknown corpus id, simulation name or property tag.
   */
  ACX_STATUS_NOT_FOUND = 4,
  /**
   * File could not be read.
   */
  ACX_STATUS_IO = 5,
  /**
   * The engine panicked; the handle arguments should be discarded.
   */
  ACX_STATUS_INTERNAL = 6,
} AcxStatus;

/**
 * Outcome of comparing two property sets.
 */
typedef enum {
  ACX_COMPARISON_EQUAL = 0,
  ACX_COMPARISON_STRICTLY_STRONGER = 1,
  ACX_COMPARISON_STRICTLY_WEAKER = 2,
  ACX_COMPARISON_INCOMPARABLE = 3,
} AcxComparison;

/**
 * A validated mapping together with its source and target systems.
 */
typedef struct AcxMapping AcxMapping;

/**
 * A validated access control system.
 */
typedef struct AcxSystem AcxSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on this thread.
 */
const char *acx_last_error(void);

/**
 * Library version as a static string.
 */
const char *acx_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void acx_string_free(char *s);

/**
 * Parses and validates a system description.
 *
 * # Safety
 * `json` and `name` must be null or NUL-terminated strings; `out` must be
 * a valid pointer.
 */
AcxStatus acx_system_from_json(const char *json, const char *name, AcxSystem **out);

/**
 * Loads a corpus system by id (`acl`, `rbac`, `acl-transfer`).
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be a valid pointer.
 */
AcxStatus acx_system_builtin(const char *id, AcxSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from this library not freed already.
 */
void acx_system_free(AcxSystem *sys);

/**
 * Counts the states reachable from the system's seeded initial state.
 *
 * # Safety
 * `sys` must be a live handle; `out_states` must be a valid pointer and
 * `out_truncated` null or valid.
 */
AcxStatus acx_system_explore(const AcxSystem *sys,
                             size_t atoms_per_sort,
                             size_t new_atoms_per_sort,
                             size_t max_depth,
                             size_t *out_states,
                             bool *out_truncated);

/**
 * Parses a mapping between two already loaded systems. The mapping's own
 * `source` and `target` fields are not consulted.
 *
 * # Safety
 * `json` must be a NUL-terminated string, `source` and `target` live
 * handles and `out` a valid pointer.
 */
AcxStatus acx_mapping_from_json(const char *json,
                                const AcxSystem *source,
                                const AcxSystem *target,
                                AcxMapping **out);

/**
 * Loads a corpus mapping by id.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be a valid pointer.
 */
AcxStatus acx_mapping_builtin(const char *id, AcxMapping **out);

/**
 * Loads a mapping file, resolving its systems next to it or in the corpus.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be a valid pointer.
 */
AcxStatus acx_mapping_load(const char *path, AcxMapping **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not freed already.
 */
void acx_mapping_free(AcxMapping *m);

/**
 * Checks comma separated property tags (or `all`) at a bound written as
 * `atoms,new,depth` (null for the default). On success `*out_report`
 * receives the JSON report and `*out_all_hold` whether every result holds.
 *
 * # Safety
 * `m` must be a live handle; `props` a NUL-terminated string; `bound`
 * null or a NUL-terminated string; `out_report` a valid pointer and
 * `out_all_hold` null or valid.
 */
AcxStatus acx_check(const AcxMapping *m,
                    const char *props,
                    const char *bound,
                    char **out_report,
                    bool *out_all_hold);

/**
 * Compares two simulations by name, or two comma separated tag sets.
 *
 * # Safety
 * `a` and `b` must be NUL-terminated strings; `out` a valid pointer.
 */
AcxStatus acx_lattice_compare(const char *a, const char *b, AcxComparison *out);

/**
 * Decomposition of a named simulation as space separated tag symbols.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` a valid pointer. The
 * string written to `*out` must be released with [`acx_string_free`].
 */
AcxStatus acx_lattice_decompose(const char *name, char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ACX_H */
