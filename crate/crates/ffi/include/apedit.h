#ifndef APEDIT_H
#define APEDIT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ApeditStatus {
  APEDIT_STATUS_OK = 0,
  APEDIT_STATUS_NULL_ARGUMENT = 1,
  APEDIT_STATUS_INVALID_UTF8 = 2,
  APEDIT_STATUS_PARSE = 3,
  APEDIT_STATUS_OVERRUN = 4,
  APEDIT_STATUS_IO = 5,
  APEDIT_STATUS_MODEL = 6,
  APEDIT_STATUS_PANIC = 7,
} ApeditStatus;

/**
 * A loaded post-editing model.
 */
typedef struct ApeditModel ApeditModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Description of the last failure on this thread; empty after success.
 * Valid until the next call on the same thread.
 */
const char *apedit_last_error(void);

/**
 * Library version as a static string.
 */
const char *apedit_version(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void apedit_string_free(char *s);

/**
 * Minimal edit script turning `mt` into `pe`, space-separated.
 *
 * # Safety
 * `mt` and `pe` must be valid C strings and `out` a writable pointer.
 */
enum ApeditStatus apedit_extract_ops(const char *mt, const char *pe, char **out);

/**
 * Applies a space-separated edit script to `mt`.
 *
 * # Safety
 * `mt` and `ops` must be valid C strings and `out` a writable pointer.
 */
enum ApeditStatus apedit_apply_ops(const char *mt, const char *ops, char **out);

/**
 * Sentence TER of `hyp` against `reference`, as a fraction.
 *
 * # Safety
 * `hyp` and `reference` must be valid C strings and `out` a writable pointer.
 */
enum ApeditStatus apedit_ter(const char *hyp, const char *reference, bool use_shifts, double *out);

/**
 * Loads a checkpoint. The handle is released with `apedit_model_free`.
 *
 * # Safety
 * `path` must be a valid C string and `out` a writable pointer.
 */
enum ApeditStatus apedit_model_load(const char *path, struct ApeditModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from `apedit_model_load` and not have been freed.
 */
void apedit_model_free(struct ApeditModel *model);

/**
 * Post-edits one MT sentence. `src` may be null except for chained models.
 *
 * # Safety
 * `model` must be a live handle, `mt` (and `src` unless null) valid C
 * strings and `out` a writable pointer.
 */
enum ApeditStatus apedit_model_post_edit(const struct ApeditModel *model,
                                         const char *src,
                                         const char *mt,
                                         size_t max_extra,
                                         char **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* APEDIT_H */
