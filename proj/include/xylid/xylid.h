// Copyright 2026 The xylid Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

/* Stable C interface to the xylid wood-identification library.
 *
 * Conventions: every function returns a xylid_status; on failure the
 * message is available from xylid_last_error() on the same thread.  Strings
 * returned through `char**` are owned by the caller and released with
 * xylid_string_free().  Handles are opaque and not thread-safe unless noted.
 * Structured results are JSON documents. */
#ifndef XYLID_XYLID_H_
#define XYLID_XYLID_H_

#include <stddef.h>
#include <stdint.h>

#if defined(XYLID_BUILDING_LIBRARY)
#define XYLID_API __attribute__((visibility("default")))
#else
#define XYLID_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum xylid_status {
  XYLID_OK = 0,
  XYLID_E_INVALID_ARGUMENT = 1,
  XYLID_E_NOT_FOUND = 2,
  XYLID_E_FORMAT = 3,
  XYLID_E_CHECKSUM = 4,
  XYLID_E_TOO_LARGE = 5,
  XYLID_E_UNAVAILABLE = 6,
  XYLID_E_TRANSPORT = 7,
  XYLID_E_IO = 8,
  XYLID_E_CORRUPTION = 9,
  XYLID_E_DIVERGENCE = 10,
  XYLID_E_INTERNAL = 11
} xylid_status;

XYLID_API const char* xylid_version(void);
XYLID_API const char* xylid_status_name(xylid_status status);
/* Message of the last failed call on this thread ("" if none). */
XYLID_API const char* xylid_last_error(void);
XYLID_API void xylid_string_free(char* s);

/* --- taxonomy -------------------------------------------------------------
 * `taxonomy_path` may be NULL for the bundled 60-class table. */
XYLID_API xylid_status xylid_taxonomy_json(const char* taxonomy_path, char** out_json);
XYLID_API xylid_status xylid_wood_info_json(const char* taxonomy_path, const char* class_id, char** out_json);

/* --- dataset, training, evaluation ----------------------------------------
 * options_json keys (all optional):
 *   synth:    classes, per_class, sibling_pairs, seed, width, height, threads
 *   train:    learning_rate, epochs, batch_size, l2, seed, split, split_seed,
 *             threads, version, taxonomy
 *   evaluate: split, seed, threads, taxonomy
 * A NULL taxonomy means <data_dir>/taxonomy.tsv when present, else bundled.
 * evaluate also returns a human-readable table through out_text (may be
 * NULL). */
XYLID_API xylid_status xylid_synth_dataset(const char* out_dir, const char* options_json, char** out_json);
XYLID_API xylid_status xylid_train(const char* data_dir, const char* model_out, const char* options_json,
                                   char** out_json);
XYLID_API xylid_status xylid_evaluate(const char* model_path, const char* data_dir, const char* options_json,
                                      char** out_json, char** out_text);

/* --- models ---------------------------------------------------------------- */
typedef struct xylid_model xylid_model;

XYLID_API xylid_status xylid_model_load(const char* path, xylid_model** out);
XYLID_API void xylid_model_free(xylid_model* model);
XYLID_API xylid_status xylid_model_info(const xylid_model* model, char** out_json);
/* Local identification of encoded PNG/JPEG bytes; the full ranking. */
XYLID_API xylid_status xylid_model_identify(const xylid_model* model, const uint8_t* image, size_t image_len,
                                            char** out_json);

/* --- identification server ------------------------------------------------
 * config_json keys: host, port, model_path, store_dir, max_image_bytes, k,
 * taxonomy.  The model is loaded here, so a bad path fails before binding. */
typedef struct xylid_server xylid_server;

XYLID_API xylid_status xylid_server_create(const char* config_json, xylid_server** out);
/* Binds and serves on a background thread. */
XYLID_API xylid_status xylid_server_start(xylid_server* server);
/* Thread-safe; returns once the server has stopped. */
XYLID_API xylid_status xylid_server_stop(xylid_server* server);
XYLID_API int xylid_server_port(const xylid_server* server);
XYLID_API void xylid_server_free(xylid_server* server);

/* One-shot identification against a running server.  The result JSON is the
 * server's response plus "client_latency_ms". */
XYLID_API xylid_status xylid_identify_remote(const char* server_url, const uint8_t* image, size_t image_len,
                                             const char* device_id, int timeout_ms, char** out_json);

/* --- field client store ---------------------------------------------------- */
typedef struct xylid_store xylid_store;

/* out_json (may be NULL) reports {records, warning}. */
XYLID_API xylid_status xylid_store_open(const char* root, xylid_store** out, char** out_json);
XYLID_API void xylid_store_free(xylid_store* store);
/* magnification <= 0 means unknown. */
XYLID_API xylid_status xylid_store_capture(xylid_store* store, const uint8_t* image, size_t image_len,
                                           const char* device_id, double magnification, char** out_json);
/* config_json keys: server_url, max_attempts, backoff_base_ms,
 * backoff_cap_ms, jitter_fraction, request_timeout_ms, seed. */
XYLID_API xylid_status xylid_store_sync(xylid_store* store, const char* config_json, char** out_json);
/* state_filter: NULL or one of CAPTURED, QUEUED, UPLOADING, IDENTIFIED,
 * FAILED.  Newest capture first. */
XYLID_API xylid_status xylid_store_gallery(xylid_store* store, const char* state_filter, char** out_json);

#ifdef __cplusplus
}
#endif

#endif /* XYLID_XYLID_H_ */
