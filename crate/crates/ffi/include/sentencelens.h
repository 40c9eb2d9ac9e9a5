#ifndef SENTENCELENS_H
#define SENTENCELENS_H

#pragma once

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible function.
typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_ARGUMENT = 1,
  SL_STATUS_INVALID_UTF8 = 2,
  SL_STATUS_IO = 3,
  SL_STATUS_MALFORMED_MODEL = 4,
  SL_STATUS_EMPTY_TEXT = 5,
  SL_STATUS_INVALID_ARGUMENT = 6,
  SL_STATUS_INTERNAL = 7,
} SlStatus;

// Opaque handle to a loaded model.
typedef struct SlModel SlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Loads a model file. On success `*out` receives a handle to free with
// [`sl_model_free`].
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum SlStatus sl_model_load(const char *path, struct SlModel **out);

// Loads a model from the bytes of a model file.
//
// # Safety
// `bytes` must point to `len` readable bytes and `out` must be valid.
enum SlStatus sl_model_from_json(const uint8_t *bytes, size_t len, struct SlModel **out);

// Releases a handle. Null is ignored.
//
// # Safety
// `model` must come from a load function and not be used afterwards.
void sl_model_free(struct SlModel *model);

// Predicted sentence in months for raw decision text.
//
// # Safety
// `model` must be a live handle, `text` NUL-terminated, `out_months` valid.
enum SlStatus sl_predict(const struct SlModel *model, const char *text, double *out_months);

// Prediction with its top `k` phrase contributions, as the same JSON object
// the HTTP predict endpoint returns.
//
// # Safety
// `model` must be a live handle, `text` NUL-terminated, `out_json` valid.
enum SlStatus sl_explain_json(const struct SlModel *model,
                              const char *text,
                              size_t k,
                              char **out_json);

// Top `k` positive and negative phrases by idf-adjusted weight, as JSON.
//
// # Safety
// `model` must be a live handle and `out_json` valid.
enum SlStatus sl_global_json(const struct SlModel *model, size_t k, char **out_json);

// Hex SHA-256 of the model file the handle was loaded from.
//
// # Safety
// `model` must be a live handle and `out` valid.
enum SlStatus sl_model_hash(const struct SlModel *model, char **out);

// Releases a string returned by this library. Null is ignored.
//
// # Safety
// `s` must come from this library and not be used afterwards.
void sl_string_free(char *s);

// Message for the most recent failure on this thread, or null. The pointer
// stays valid until the next failing call on the same thread.
const char *sl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *sl_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SENTENCELENS_H */
