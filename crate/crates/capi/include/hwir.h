#ifndef HWIR_H
#define HWIR_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum HwirStatus {
  HWIR_STATUS_OK = 0,
  HWIR_STATUS_NULL_ARGUMENT = 1,
  HWIR_STATUS_INVALID_UTF8 = 2,
  HWIR_STATUS_PARSE = 3,
  HWIR_STATUS_VERIFY = 4,
  HWIR_STATUS_LINK = 5,
  HWIR_STATUS_LOWER = 6,
  HWIR_STATUS_SIM = 7,
  HWIR_STATUS_IO = 8,
  HWIR_STATUS_NOT_FOUND = 9,
  HWIR_STATUS_PANIC = 10,
} HwirStatus;

typedef struct HwirModule HwirModule;

typedef struct HwirSim HwirSim;

typedef struct HwirSimSummary {
  uint64_t assertion_failures;
  uint64_t steps;
  uint64_t changes;
  /**
   * End time in femtoseconds.
   */
  uint64_t end_fs;
  uint32_t end_delta;
  uint32_t end_epsilon;
  /**
   * Nonzero if the event queue ran dry.
   */
  uint8_t finished;
} HwirSimSummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next call into the library on the same thread.
 */
const char *hwir_last_error(void);

/**
 * # Safety
 * `s` must be null or a string returned by this library.
 */
void hwir_string_free(char *s);

/**
 * Parse and verify a module from its text form.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum HwirStatus hwir_module_parse(const char *text, struct HwirModule **out);

/**
 * # Safety
 * `m` must be null or a handle from this library not freed before.
 */
void hwir_module_free(struct HwirModule *m);

/**
 * Print a module in text form. Free the result with `hwir_string_free`.
 *
 * # Safety
 * `m` must be a live module handle and `out` a valid pointer.
 */
enum HwirStatus hwir_module_print(const struct HwirModule *m, char **out);

/**
 * Link `n` modules into a new one. The inputs are left untouched.
 *
 * # Safety
 * `modules` must point to `n` live module handles and `out` be valid.
 */
enum HwirStatus hwir_module_link(const struct HwirModule *const *modules,
                                 size_t n,
                                 struct HwirModule **out);

/**
 * Abstraction level of the whole module (1, 2 or 3).
 *
 * # Safety
 * `m` must be a live module handle and `level` a valid pointer.
 */
enum HwirStatus hwir_module_level(const struct HwirModule *m, uint8_t *level);

/**
 * Lower the module in place towards `target_level`. Units that cannot be
 * lowered stay unchanged; their `unit<TAB>pass<TAB>reason` lines are
 * returned through `report` if it is not null.
 *
 * # Safety
 * `m` must be a live module handle; `report` null or a valid pointer.
 */
enum HwirStatus hwir_module_lower(struct HwirModule *m, uint8_t target_level, char **report);

/**
 * Elaborate `top` (with or without the leading `@`) for simulation.
 *
 * # Safety
 * `m` must be a live module handle, `top` a string, `out` valid.
 */
enum HwirStatus hwir_sim_new(const struct HwirModule *m, const char *top, struct HwirSim **out);

/**
 * # Safety
 * `s` must be null or a handle from this library not freed before.
 */
void hwir_sim_free(struct HwirSim *s);

/**
 * Run until the time literal `until` (e.g. "100ns"), or until no events
 * remain if `until` is null.
 *
 * # Safety
 * `s` must be a live simulator; `until` null or a string; `summary` null
 * or a valid pointer.
 */
enum HwirStatus hwir_sim_run(struct HwirSim *s, const char *until, struct HwirSimSummary *summary);

/**
 * Current value of a signal, by hierarchical name such as "acc_tb.q".
 *
 * # Safety
 * `s` must be a live simulator, `name` a string, `out` valid.
 */
enum HwirStatus hwir_sim_value(const struct HwirSim *s, const char *name, char **out);

/**
 * Write the recorded trace as a VCD file.
 *
 * # Safety
 * `s` must be a live simulator and `path` a string.
 */
enum HwirStatus hwir_sim_write_vcd(const struct HwirSim *s, const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HWIR_H */
