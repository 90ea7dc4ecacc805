/* SPDX-License-Identifier: Apache-2.0 */

#ifndef RTLSEEK_H
#define RTLSEEK_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum RtlStatus {
  RTL_STATUS_OK = 0,
  RTL_STATUS_NULL_POINTER = 1,
  RTL_STATUS_INVALID_UTF8 = 2,
  RTL_STATUS_SYNTAX = 3,
  RTL_STATUS_INVALID_ARGUMENT = 4,
  RTL_STATUS_PANIC = 5,
} RtlStatus;

/**
 * Sliding window of recent reasoning lengths.
 */
typedef struct RtlHistory RtlHistory;

/**
 * Parsed Verilog design.
 */
typedef struct RtlTree RtlTree;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *rtlseek_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rtlseek_version(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed already.
 */
void rtlseek_string_free(char *s);

/**
 * Parses `source`. A syntax, resolution or unsupported-construct error
 * yields [`RtlStatus::Syntax`].
 *
 * # Safety
 * `source` must be NUL-terminated; `out` must be writable.
 */
enum RtlStatus rtlseek_parse(const char *source, struct RtlTree **out);

/**
 * Releases a tree. NULL is ignored.
 *
 * # Safety
 * `tree` must come from [`rtlseek_parse`] and not have been freed already.
 */
void rtlseek_tree_free(struct RtlTree *tree);

/**
 * Serializes a tree as ast/1 JSON.
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum RtlStatus rtlseek_tree_to_json(const struct RtlTree *tree, char **out);

/**
 * Hex SHA-256 digest of the canonical form.
 *
 * # Safety
 * `tree` must be a live handle; `out` must be writable.
 */
enum RtlStatus rtlseek_tree_digest(const struct RtlTree *tree, char **out);

/**
 * Structural equivalence of two trees.
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum RtlStatus rtlseek_equivalent(const struct RtlTree *a, const struct RtlTree *b, bool *out);

/**
 * Empty history window.
 */
struct RtlHistory *rtlseek_history_new(void);

/**
 * Releases a history window. NULL is ignored.
 *
 * # Safety
 * `history` must come from [`rtlseek_history_new`] and not have been freed.
 */
void rtlseek_history_free(struct RtlHistory *history);

/**
 * Number of lengths currently held.
 *
 * # Safety
 * `history` must be a live handle or NULL (which yields 0).
 */
size_t rtlseek_history_len(const struct RtlHistory *history);

/**
 * Scores one response and writes the reward/1 JSON breakdown.
 *
 * `stage` is 2 or 3. `vectors_json` is an optional tv/1 suite and `top` an
 * optional top-module name; both may be NULL. A non-NULL `history` receives
 * the response's reasoning length.
 *
 * # Safety
 * String arguments must be NUL-terminated or NULL where allowed; handles
 * must be live; `out` must be writable.
 */
enum RtlStatus rtlseek_score(const char *response,
                             uint8_t stage,
                             const char *vectors_json,
                             const char *top,
                             struct RtlHistory *history,
                             char **out);

/**
 * Unbiased pass@k for `c` correct out of `n` samples.
 *
 * # Safety
 * `out` must be writable.
 */
enum RtlStatus rtlseek_pass_at_k(size_t n, size_t c, size_t k, double *out);

/**
 * Group-normalized advantages of `len` rewards, written to `out[0..len]`.
 *
 * # Safety
 * `rewards` and `out` must point to `len` readable/writable doubles.
 */
enum RtlStatus rtlseek_advantages(const double *rewards, size_t len, double eps, double *out);

/**
 * Clipped-surrogate objective with a k3 penalty for one group of `len`
 * outputs. Advantages are computed from `rewards` with eps 1e-8.
 *
 * # Safety
 * Each array must hold `len` doubles; `out` must be writable.
 */
enum RtlStatus rtlseek_objective(const double *rewards,
                                 const double *logprob_current,
                                 const double *logprob_old,
                                 const double *logprob_ref,
                                 size_t len,
                                 double clip_eps,
                                 double beta,
                                 double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RTLSEEK_H */
