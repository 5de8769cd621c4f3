#ifndef PERMSTAB_H
#define PERMSTAB_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum PsStatus {
  PS_STATUS_OK = 0,
  PS_STATUS_NULL_POINTER = 1,
  PS_STATUS_INVALID_UTF8 = 2,
  PS_STATUS_PRESENTATION = 3,
  PS_STATUS_INSTANCE = 4,
  PS_STATUS_PRECONDITION = 5,
  PS_STATUS_BUDGET = 6,
  PS_STATUS_OVERFLOW = 7,
  PS_STATUS_ARGUMENT = 8,
  PS_STATUS_IO = 9,
  PS_STATUS_JSON = 10,
  PS_STATUS_PANIC = 11,
} PsStatus;

typedef struct PsActionSpace PsActionSpace;

/**
 * A presentation together with its canonical equation set.
 */
typedef struct PsPresentation PsPresentation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds `Z^d × Π Z/β_i` on `m` generators. `betas` may be null when
 * `n_betas` is 0.
 *
 * # Safety
 * `betas` must point to `n_betas` values and `out` must be writable.
 */
enum PsStatus ps_presentation_new(size_t m,
                                  size_t d,
                                  const uint64_t *betas,
                                  size_t n_betas,
                                  struct PsPresentation **out);

/**
 * # Safety
 * `p` must come from `ps_presentation_new` or be null.
 */
void ps_presentation_free(struct PsPresentation *p);

/**
 * Number of words in the presentation's equation set.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t ps_presentation_equation_count(const struct PsPresentation *p);

/**
 * Builds an action from `m` rows of `n` images each, row-major.
 *
 * # Safety
 * `perms` must point to `m·n` values and `out` must be writable.
 */
enum PsStatus ps_action_space_new(size_t n,
                                  size_t m,
                                  const uint32_t *perms,
                                  struct PsActionSpace **out);

/**
 * Parses an instance file (`{"m", "n", "perms"}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum PsStatus ps_action_space_from_json(const char *json, struct PsActionSpace **out);

/**
 * Serializes an action, tagged with `presentation` when it is non-null.
 *
 * # Safety
 * Handles must be live (or null for `presentation`); `out` writable.
 */
enum PsStatus ps_action_space_to_json(const struct PsActionSpace *x,
                                      const struct PsPresentation *presentation,
                                      char **out);

/**
 * # Safety
 * `x` must be a live handle or null.
 */
size_t ps_action_space_n(const struct PsActionSpace *x);

/**
 * # Safety
 * `x` must be a live handle or null.
 */
size_t ps_action_space_m(const struct PsActionSpace *x);

/**
 * # Safety
 * `x` must come from this library or be null.
 */
void ps_action_space_free(struct PsActionSpace *x);

/**
 * `L_E` as a reduced fraction.
 *
 * # Safety
 * Handles must be live and the outputs writable.
 */
enum PsStatus ps_local_defect(const struct PsActionSpace *x,
                              const struct PsPresentation *p,
                              int64_t *numer,
                              int64_t *denom);

/**
 * # Safety
 * Handles must be live and `out` writable.
 */
enum PsStatus ps_is_solution(const struct PsActionSpace *x,
                             const struct PsPresentation *p,
                             bool *out);

/**
 * Repairs `x` to an exact solution. `options_json` may be null or hold
 * `mode`, `C_d`, `t_E`, `C_Box`, `h`, `delta` (rationals as strings) and
 * `budget_points`. Writes the repaired action and the JSON report.
 *
 * # Safety
 * Handles must be live, `options_json` null or NUL-terminated, outputs
 * writable.
 */
enum PsStatus ps_repair(const struct PsActionSpace *x,
                        const struct PsPresentation *p,
                        const char *options_json,
                        struct PsActionSpace **out_space,
                        char **out_report);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into the library on the same thread.
 */
const char *ps_last_error_message(void);

/**
 * # Safety
 * `s` must come from this library or be null.
 */
void ps_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PERMSTAB_H */
