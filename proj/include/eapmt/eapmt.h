// Copyright 2026 The EAPMT Authors
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

#ifndef EAPMT_EAPMT_H_
#define EAPMT_EAPMT_H_

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(EAPMT_BUILDING_LIBRARY)
#define EAPMT_API __attribute__((visibility("default")))
#else
#define EAPMT_API
#endif

typedef enum eapmt_status {
  EAPMT_OK = 0,
  EAPMT_ERR_INVALID_ARGUMENT = 1,
  EAPMT_ERR_IO = 2,
  EAPMT_ERR_PARSE = 3,
  EAPMT_ERR_SCHEMA = 4,
  EAPMT_ERR_NOT_FOUND = 5,
  EAPMT_ERR_REPLAY_MISS = 6,
  EAPMT_ERR_NETWORK = 7,
  EAPMT_ERR_EMPTY_RESPONSE = 8,
  EAPMT_ERR_DEGENERATE_OUTPUT = 9,
  EAPMT_ERR_EXPLANATION_STAGE = 10,
  EAPMT_ERR_TRANSLATION_STAGE = 11,
  EAPMT_ERR_PROTOCOL = 12,
  EAPMT_ERR_JUDGE_PARSE = 13,
  EAPMT_ERR_RAGGED_GRID = 14,
  EAPMT_ERR_INTERNAL = 99
} eapmt_status;

typedef struct eapmt_corpus eapmt_corpus;
typedef struct eapmt_client eapmt_client;

EAPMT_API const char* eapmt_version(void);
EAPMT_API const char* eapmt_status_name(eapmt_status status);
/* Message of the last failed call on this thread; empty after success. */
EAPMT_API const char* eapmt_last_error(void);
/* Frees strings returned through char** out parameters. */
EAPMT_API void eapmt_string_free(char* s);
/* "trace", "debug", "info", "warn", "error", "off" */
EAPMT_API eapmt_status eapmt_set_log_level(const char* level);

/* Corpus */
EAPMT_API eapmt_status eapmt_corpus_load(const char* path, eapmt_corpus** out);
EAPMT_API void eapmt_corpus_free(eapmt_corpus* corpus);
EAPMT_API eapmt_status eapmt_corpus_stats(const eapmt_corpus* corpus, uint64_t* poems,
                                          uint64_t* lines, uint64_t* tokens);
/* JSON array of loader warnings. */
EAPMT_API eapmt_status eapmt_corpus_warnings(const eapmt_corpus* corpus, char** out_json);

/* Prompt templates */
EAPMT_API eapmt_status eapmt_template_names(char** out_json);
EAPMT_API eapmt_status eapmt_template_text(const char* template_id, char** out);
/* bindings_json is an object of placeholder name to string. */
EAPMT_API eapmt_status eapmt_template_render(const char* template_id, const char* bindings_json,
                                             char** out);
EAPMT_API eapmt_status eapmt_templates_export(const char* dir);

/* BLEU. tokenizer is "13a" or "zh". */
EAPMT_API eapmt_status eapmt_bleu_corpus(const char* const* hypotheses,
                                         const char* const* references, size_t count,
                                         const char* tokenizer, int lowercase, double* score,
                                         char** signature);
EAPMT_API eapmt_status eapmt_bleu_sentence(const char* hypothesis, const char* reference,
                                           const char* tokenizer, double* score);

/* Model client. config_json uses the run configuration fields mode, cache,
   parallel, api_base and api_key. */
EAPMT_API eapmt_status eapmt_client_create(const char* config_json, eapmt_client** out);
/* Live client answering from canned rules: [{"pattern": regex, "response": text}]. */
EAPMT_API eapmt_status eapmt_client_create_stub(const char* rules_json, const char* cache_dir,
                                                eapmt_client** out);
EAPMT_API void eapmt_client_free(eapmt_client* client);
/* model_json is a model name string or a model object. */
EAPMT_API eapmt_status eapmt_client_complete(eapmt_client* client, const char* model_json,
                                             const char* prompt, char** out);
EAPMT_API eapmt_status eapmt_client_backend_calls(const eapmt_client* client, uint64_t* calls);

/* Runs a pipeline command (translate, eapmt, probe, questionnaire-make,
   questionnaire-ingest, judge, report) and writes its run directory.
   client may be NULL to build one from config_json. */
EAPMT_API eapmt_status eapmt_run(const char* command, const char* config_json,
                                 const char* request_json, eapmt_client* client,
                                 char** result_json);

#ifdef __cplusplus
}
#endif

#endif
