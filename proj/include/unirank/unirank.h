/*
 * Copyright 2026 The unirank Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the unirank ranking toolkit.
 *
 * Every function returns a unirank_status. On failure the thread-local
 * message from unirank_last_error() describes the problem. Handles are
 * opaque; release each with its matching *_free function. Strings returned
 * through char** are owned by the caller and released with
 * unirank_string_free. */

#ifndef UNIRANK_UNIRANK_H_
#define UNIRANK_UNIRANK_H_

#include <stddef.h>

#if defined(UNIRANK_BUILDING_LIBRARY)
#define UNIRANK_API __attribute__((visibility("default")))
#else
#define UNIRANK_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum {
  UNIRANK_OK = 0,
  UNIRANK_ERR_INVALID_ARGUMENT = 1, /* null handle or bad call */
  UNIRANK_ERR_PARSE = 2,            /* malformed dataset or config text */
  UNIRANK_ERR_VALIDATION = 3,       /* well-formed input violating a constraint */
  UNIRANK_ERR_IO = 4,               /* unreadable or unwritable path */
  UNIRANK_ERR_INTERNAL = 5
} unirank_status;

typedef struct unirank_dataset unirank_dataset;
typedef struct unirank_config unirank_config;
typedef struct unirank_model unirank_model;
typedef struct unirank_report unirank_report;

UNIRANK_API const char* unirank_version(void);
UNIRANK_API const char* unirank_last_error(void);
UNIRANK_API void unirank_string_free(char* s);

/* Datasets in LETOR text format. */
UNIRANK_API unirank_status unirank_dataset_load(const char* path, unirank_dataset** out);
UNIRANK_API unirank_status unirank_dataset_parse(const char* text, unirank_dataset** out);
UNIRANK_API unirank_status unirank_dataset_query_count(const unirank_dataset* d, size_t* out);
UNIRANK_API unirank_status unirank_dataset_document_count(const unirank_dataset* d, size_t* out);
UNIRANK_API unirank_status unirank_dataset_feature_count(const unirank_dataset* d, size_t* out);
UNIRANK_API void unirank_dataset_free(unirank_dataset* d);

/* Training options as key=value pairs. */
UNIRANK_API unirank_status unirank_config_new(unirank_config** out);
UNIRANK_API unirank_status unirank_config_set(unirank_config* c, const char* key, const char* value);
UNIRANK_API unirank_status unirank_config_load(unirank_config* c, const char* path);
UNIRANK_API unirank_status unirank_config_to_text(const unirank_config* c, char** out);
UNIRANK_API void unirank_config_free(unirank_config* c);

/* Trains the configured model; selection uses `valid`. */
UNIRANK_API unirank_status unirank_train(const unirank_config* c, const unirank_dataset* train,
                                         const unirank_dataset* valid, unirank_model** out);
/* Per-epoch (or per-round) records of the run that produced the model:
 * learner, epoch, training loss, comma-joined validation NDCG. */
UNIRANK_API unirank_status unirank_model_training_log(const unirank_model* m, char** out);
UNIRANK_API unirank_status unirank_model_type(const unirank_model* m, char** out);
UNIRANK_API unirank_status unirank_model_save(const unirank_model* m, const char* path);
UNIRANK_API unirank_status unirank_model_load(const char* path, unirank_model** out);
/* Scores query `query_index` of `d`; `scores` must hold its document count. */
UNIRANK_API unirank_status unirank_model_predict(const unirank_model* m, const unirank_dataset* d,
                                                 size_t query_index, double* scores,
                                                 size_t capacity);
UNIRANK_API void unirank_model_free(unirank_model* m);

/* Evaluation. `cutoffs` may be null for the default 1,3,5,10; `policy` is
 * "skip" or "one" (null means skip); max_grade < 0 means the dataset's
 * largest rating. */
UNIRANK_API unirank_status unirank_evaluate(const unirank_model* m, const unirank_dataset* d,
                                            const size_t* cutoffs, size_t cutoff_count,
                                            const char* policy, int max_grade,
                                            unirank_report** out);
UNIRANK_API unirank_status unirank_evaluate_scores(const unirank_dataset* d,
                                                   const double* scores, size_t score_count,
                                                   const size_t* cutoffs, size_t cutoff_count,
                                                   const char* policy, int max_grade,
                                                   unirank_report** out);
UNIRANK_API unirank_status unirank_report_ndcg(const unirank_report* r, size_t k, double* out);
UNIRANK_API unirank_status unirank_report_err(const unirank_report* r, size_t k, double* out);
UNIRANK_API unirank_status unirank_report_queries_evaluated(const unirank_report* r, size_t* out);
UNIRANK_API unirank_status unirank_report_to_tsv(const unirank_report* r, char** out);
UNIRANK_API void unirank_report_free(unirank_report* r);

/* Unique-rating loss and residuals for one query; window 0 means none. */
UNIRANK_API unirank_status unirank_loss(const int* ratings, const double* scores, size_t n,
                                        size_t window, double* out);
UNIRANK_API unirank_status unirank_residuals(const int* ratings, const double* scores, size_t n,
                                             size_t window, double* out);

#ifdef __cplusplus
}
#endif

#endif /* UNIRANK_UNIRANK_H_ */
