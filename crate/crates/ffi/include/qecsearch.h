#ifndef QECSEARCH_H
#define QECSEARCH_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes. Zero is success.
 */
typedef enum QsStatus {
  QS_STATUS_OK = 0,
  QS_STATUS_NULL_POINTER = 1,
  QS_STATUS_INVALID_ARGUMENT = 2,
  QS_STATUS_CONFIG = 3,
  QS_STATUS_INVARIANT = 4,
  QS_STATUS_GUARD = 5,
  QS_STATUS_IO = 6,
  QS_STATUS_PARSE = 7,
  /**
   * A search ran its whole budget without reaching the tolerance.
   */
  QS_STATUS_EXHAUSTED = 8,
  QS_STATUS_PANIC = 9,
} QsStatus;

/**
 * Opaque code handle.
 */
typedef struct QsCode QsCode;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failure on this thread, or NULL.
 */
const char *qs_last_error(void);

/**
 * Library version as a static string.
 */
const char *qs_version(void);

/**
 * Looks up a built-in code ("5-2-3", "steane", "8-8-3", ...).
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum QsStatus qs_code_builtin(const char *name, struct QsCode **out);

/**
 * Builds the stabilizer code of `count` generator strings.
 *
 * # Safety
 * `gens` must point to `count` NUL-terminated strings; `out` must be writable.
 */
enum QsStatus qs_code_from_stabilizers(const char *const *gens, size_t count, struct QsCode **out);

/**
 * Parses and checks a code artifact.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum QsStatus qs_code_from_artifact(const char *json, struct QsCode **out);

/**
 * Serializes the code as an artifact; free the string with `qs_string_free`.
 *
 * # Safety
 * `code` must be a live handle; `out` must be writable.
 */
enum QsStatus qs_code_to_artifact(const struct QsCode *code, uint64_t seed, char **out);

/**
 * Runs a named search preset with the given seed. On `Ok` a code handle is
 * written to `out`; on `Exhausted` `out` is left NULL. `cost_l1` receives
 * the best C^ℓ1 in both cases.
 *
 * # Safety
 * `name` must be NUL-terminated; `out` and `cost_l1` must be writable.
 */
enum QsStatus qs_search_preset(const char *name,
                               uint64_t seed,
                               struct QsCode **out,
                               double *cost_l1);

/**
 * # Safety
 * `code` must be a live handle; `n` and `k` must be writable.
 */
enum QsStatus qs_code_shape(const struct QsCode *code, size_t *n, size_t *k);

/**
 * # Safety
 * `code` must be a live handle; `out` must be writable.
 */
enum QsStatus qs_code_distance(const struct QsCode *code, size_t *out);

/**
 * Writes A_0..A_n and B_0..B_n; `len` must be n + 1.
 *
 * # Safety
 * `code` must be a live handle; `a` and `b` must hold `len` doubles.
 */
enum QsStatus qs_code_enumerators(const struct QsCode *code, double *a, double *b, size_t len);

/**
 * C^ℓ1 of the code against all Pauli errors of weight < `d`.
 *
 * # Safety
 * `code` must be a live handle; `out` must be writable.
 */
enum QsStatus qs_code_cost_l1(const struct QsCode *code, size_t d, double *out);

/**
 * Effective-distance bound of a concatenated code.
 *
 * # Safety
 * `deltas` must hold `len` doubles; `out` must be writable.
 */
enum QsStatus qs_concat_bound(const double *deltas, size_t len, double c_z, double *out);

/**
 * # Safety
 * `code` must come from this library and not be freed twice. NULL is ignored.
 */
void qs_code_free(struct QsCode *code);

/**
 * # Safety
 * `s` must come from this library and not be freed twice. NULL is ignored.
 */
void qs_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QECSEARCH_H */
