// Copyright 2026 The mmseq Authors
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

/* C interface to the mmseq library.
 *
 * Every function returns an mmseq_status. On failure a message for the calling
 * thread is available from mmseq_last_error() until the next call on that
 * thread. Strings handed out through char** parameters are owned by the
 * caller and released with mmseq_string_free().
 */
#ifndef MMSEQ_MMSEQ_H_
#define MMSEQ_MMSEQ_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(MMSEQ_BUILDING_LIBRARY)
#define MMSEQ_API __declspec(dllexport)
#else
#define MMSEQ_API __declspec(dllimport)
#endif
#else
#define MMSEQ_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mmseq_status {
  MMSEQ_OK = 0,
  MMSEQ_ERR_INVALID_ARGUMENT = 1,
  MMSEQ_ERR_CONFIG = 2,
  MMSEQ_ERR_IO = 3,
  MMSEQ_ERR_PARSE = 4,
  MMSEQ_ERR_INVALID_SEQUENCE = 5,
  MMSEQ_ERR_INVALID_TOKEN = 6,
  MMSEQ_ERR_ENUMERATION_TOO_LARGE = 7,
  MMSEQ_ERR_SHAPE_MISMATCH = 8,
  MMSEQ_ERR_NON_FINITE = 9,
  /* The run completed but its pass condition did not hold. */
  MMSEQ_CHECK_FAILED = 10,
  MMSEQ_ERR_INTERNAL = 11
} mmseq_status;

typedef struct mmseq_config mmseq_config;
typedef struct mmseq_model mmseq_model;

/* Test hook for mmseq_run_gradcheck: halve the analytic gradient. */
#define MMSEQ_GRADCHECK_DROP_FACTOR_TWO 1u

MMSEQ_API const char* mmseq_version(void);
MMSEQ_API const char* mmseq_status_string(mmseq_status status);
MMSEQ_API const char* mmseq_last_error(void);
MMSEQ_API void mmseq_string_free(char* s);

/* Configuration. */
MMSEQ_API mmseq_status mmseq_config_default(mmseq_config** out);
MMSEQ_API mmseq_status mmseq_config_load(const char* path, mmseq_config** out);
MMSEQ_API mmseq_status mmseq_config_parse(const char* json_text, mmseq_config** out);
/* Dotted key such as "train.lambda"; value is JSON or a bare string. */
MMSEQ_API mmseq_status mmseq_config_set(mmseq_config* config, const char* key, const char* value);
MMSEQ_API mmseq_status mmseq_config_to_json(const mmseq_config* config, char** out_json);
MMSEQ_API void mmseq_config_free(mmseq_config* config);

/* Commands. Each writes a JSON summary to *out_json when out_json is not NULL. */
MMSEQ_API mmseq_status mmseq_run_train(const mmseq_config* config, char** out_json);
MMSEQ_API mmseq_status mmseq_run_verify(const mmseq_config* config, char** out_json);
MMSEQ_API mmseq_status mmseq_run_gradcheck(const mmseq_config* config, unsigned flags,
                                           char** out_json);
MMSEQ_API mmseq_status mmseq_run_eval(const mmseq_config* config, const char* checkpoint_path,
                                      char** out_json);

/* Models. Sequences are whitespace-separated tokens. */
MMSEQ_API mmseq_status mmseq_model_load(const char* path, mmseq_model** out);
MMSEQ_API mmseq_status mmseq_model_save(const mmseq_model* model, const char* path);
MMSEQ_API void mmseq_model_free(mmseq_model* model);
MMSEQ_API size_t mmseq_model_parameter_count(const mmseq_model* model);
MMSEQ_API mmseq_status mmseq_model_log_prob(const mmseq_model* model, const char* source,
                                            const char* target, double* out);
MMSEQ_API mmseq_status mmseq_model_sample(const mmseq_model* model, const char* source,
                                          uint64_t seed, char** out_target);

#ifdef __cplusplus
}
#endif

#endif /* MMSEQ_MMSEQ_H_ */
