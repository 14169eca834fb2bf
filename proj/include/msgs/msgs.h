/* Copyright Contributors to the msgs project
 * SPDX-License-Identifier: Apache-2.0 */

#ifndef MSGS_MSGS_H
#define MSGS_MSGS_H

#include <stddef.h>

#if defined(MSGS_BUILDING_LIBRARY)
#define MSGS_API __attribute__((visibility("default")))
#else
#define MSGS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum msgs_status {
  MSGS_OK = 0,
  MSGS_ERR_INVALID_ARGUMENT = 1,
  MSGS_ERR_PARSE = 2,
  MSGS_ERR_IO = 3,
  MSGS_ERR_NUMERIC = 4,
  MSGS_ERR_UNSUPPORTED = 5,
  MSGS_ERR_INTERNAL = 6
} msgs_status;

/* Message of the last failed call on this thread; empty after a success. */
MSGS_API const char* msgs_last_error(void);
MSGS_API const char* msgs_status_name(msgs_status status);
MSGS_API const char* msgs_version(void);

/* 0 restores the default (all logical cores). */
MSGS_API msgs_status msgs_set_threads(int threads);

/* INI-style configuration: [section] key = value. */
typedef struct msgs_config msgs_config;

MSGS_API msgs_status msgs_config_create(msgs_config** out);
MSGS_API msgs_status msgs_config_load(const char* path, msgs_config** out);
MSGS_API msgs_status msgs_config_parse(const char* text, msgs_config** out);
MSGS_API void msgs_config_destroy(msgs_config* config);
MSGS_API msgs_status msgs_config_set(msgs_config* config, const char* section, const char* key, const char* value);
/* Copies the value with a terminating NUL into buf when it fits; *needed receives the
 * required size including the NUL. MSGS_ERR_INVALID_ARGUMENT when the key is absent. */
MSGS_API msgs_status msgs_config_get(const msgs_config* config, const char* section, const char* key, char* buf,
                                     size_t size, size_t* needed);
MSGS_API msgs_status msgs_config_to_text(const msgs_config* config, char* buf, size_t size, size_t* needed);

/* Command schema. Indices are stable for the lifetime of the library. */
MSGS_API size_t msgs_command_count(void);
MSGS_API const char* msgs_command_name(size_t index);
MSGS_API const char* msgs_command_summary(size_t index);

typedef enum msgs_key_kind {
  MSGS_KEY_VALUE = 0,
  MSGS_KEY_INPUT_PATH = 1,
  MSGS_KEY_OPTIONAL_PATH = 2
} msgs_key_kind;

typedef struct msgs_key_info {
  const char* section;
  const char* key;
  const char* default_value;
  const char* help;
  msgs_key_kind kind;
} msgs_key_info;

MSGS_API msgs_status msgs_command_key_count(const char* command, size_t* count);
MSGS_API msgs_status msgs_command_key(const char* command, size_t index, msgs_key_info* info);

/* Validates `config` against the command schema: unknown keys and unset or missing
 * input paths fail with MSGS_ERR_INVALID_ARGUMENT. */
MSGS_API msgs_status msgs_check(const char* command, const msgs_config* config);

typedef void (*msgs_log_fn)(const char* message, void* user_data);

/* Runs a subcommand. `config` may be NULL (all defaults). Outputs are written under
 * output_dir, which is created if needed. */
MSGS_API msgs_status msgs_run(const char* command, const msgs_config* config, const char* output_dir,
                              msgs_log_fn log, void* user_data);

#ifdef __cplusplus
}
#endif

#endif
