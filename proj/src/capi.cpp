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

#include "unirank/unirank.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>
#include <string>

#include "unirank/data.hpp"
#include "unirank/errors.hpp"
#include "unirank/metrics.hpp"
#include "unirank/model.hpp"
#include "unirank/unique_loss.hpp"

struct unirank_dataset {
  unirank::Dataset data;
};

struct unirank_config {
  unirank::TrainOptions options;
};

struct unirank_model {
  unirank::Model model;
  std::string log;
};

struct unirank_report {
  unirank::EvalReport report;
};

namespace {

thread_local std::string last_error;

unirank_status fail(unirank_status status, const std::string& message) {
  last_error = message;
  return status;
}

// Runs `body`, mapping exceptions to status codes.
template <typename Body>
unirank_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return UNIRANK_OK;
  } catch (const unirank::ParseError& e) {
    return fail(UNIRANK_ERR_PARSE, e.what());
  } catch (const unirank::IoError& e) {
    return fail(UNIRANK_ERR_IO, e.what());
  } catch (const unirank::ValidationError& e) {
    return fail(UNIRANK_ERR_VALIDATION, e.what());
  } catch (const unirank::ContractViolation& e) {
    return fail(UNIRANK_ERR_INVALID_ARGUMENT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(UNIRANK_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(UNIRANK_ERR_INTERNAL, e.what());
  }
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <typename... Ptrs>
bool any_null(Ptrs... ptrs) {
  return ((ptrs == nullptr) || ...);
}

unirank_status null_argument() {
  return fail(UNIRANK_ERR_INVALID_ARGUMENT, "null argument");
}

unirank::EvalOptions eval_options(const size_t* cutoffs, size_t cutoff_count, const char* policy,
                                  int max_grade) {
  unirank::EvalOptions options;
  if (cutoffs && cutoff_count > 0) options.cutoffs.assign(cutoffs, cutoffs + cutoff_count);
  if (policy) options.policy = unirank::parse_zero_label_policy(policy);
  if (max_grade >= 0) options.max_grade = max_grade;
  return options;
}

unirank::LossConfig loss_config(size_t window) {
  unirank::LossConfig config;
  if (window > 0) config.window = window;
  return config;
}

}  // namespace

extern "C" {

const char* unirank_version(void) { return UNIRANK_VERSION_STRING; }

const char* unirank_last_error(void) { return last_error.c_str(); }

void unirank_string_free(char* s) { std::free(s); }

unirank_status unirank_dataset_load(const char* path, unirank_dataset** out) {
  if (any_null(path, out)) return null_argument();
  return guarded([&] { *out = new unirank_dataset{unirank::load_letor(path)}; });
}

unirank_status unirank_dataset_parse(const char* text, unirank_dataset** out) {
  if (any_null(text, out)) return null_argument();
  return guarded([&] { *out = new unirank_dataset{unirank::parse_letor(std::string_view(text))}; });
}

unirank_status unirank_dataset_query_count(const unirank_dataset* d, size_t* out) {
  if (any_null(d, out)) return null_argument();
  *out = d->data.queries().size();
  return UNIRANK_OK;
}

unirank_status unirank_dataset_document_count(const unirank_dataset* d, size_t* out) {
  if (any_null(d, out)) return null_argument();
  *out = d->data.document_count();
  return UNIRANK_OK;
}

unirank_status unirank_dataset_feature_count(const unirank_dataset* d, size_t* out) {
  if (any_null(d, out)) return null_argument();
  *out = d->data.feature_count();
  return UNIRANK_OK;
}

void unirank_dataset_free(unirank_dataset* d) { delete d; }

unirank_status unirank_config_new(unirank_config** out) {
  if (any_null(out)) return null_argument();
  return guarded([&] { *out = new unirank_config{}; });
}

unirank_status unirank_config_set(unirank_config* c, const char* key, const char* value) {
  if (any_null(c, key, value)) return null_argument();
  return guarded([&] { unirank::apply_option(c->options, key, value); });
}

unirank_status unirank_config_load(unirank_config* c, const char* path) {
  if (any_null(c, path)) return null_argument();
  return guarded([&] {
    std::ifstream in(path);
    if (!in) throw unirank::IoError(std::string("cannot open '") + path + "'");
    std::ostringstream text;
    text << in.rdbuf();
    try {
      unirank::apply_options_text(c->options, text.str());
    } catch (const unirank::ParseError& e) {
      throw unirank::ParseError(e.line(), std::string(path) + ": " + e.what());
    }
  });
}

unirank_status unirank_config_to_text(const unirank_config* c, char** out) {
  if (any_null(c, out)) return null_argument();
  return guarded([&] { *out = copy_string(unirank::options_to_text(c->options)); });
}

void unirank_config_free(unirank_config* c) { delete c; }

unirank_status unirank_train(const unirank_config* c, const unirank_dataset* train,
                             const unirank_dataset* valid, unirank_model** out) {
  if (any_null(c, train, valid, out)) return null_argument();
  return guarded([&] {
    unirank::TrainOutcome t = unirank::train_model(train->data, valid->data, c->options);
    *out = new unirank_model{std::move(t.model), t.log.to_text()};
  });
}

unirank_status unirank_model_training_log(const unirank_model* m, char** out) {
  if (any_null(m, out)) return null_argument();
  return guarded([&] { *out = copy_string(m->log); });
}

unirank_status unirank_model_type(const unirank_model* m, char** out) {
  if (any_null(m, out)) return null_argument();
  return guarded([&] { *out = copy_string(unirank::to_string(m->model.type)); });
}

unirank_status unirank_model_save(const unirank_model* m, const char* path) {
  if (any_null(m, path)) return null_argument();
  return guarded([&] { unirank::save_model(path, m->model); });
}

unirank_status unirank_model_load(const char* path, unirank_model** out) {
  if (any_null(path, out)) return null_argument();
  return guarded([&] {
    unirank::Model model;
    try {
      model = unirank::load_model(path);
    } catch (const unirank::ValidationError& e) {
      throw unirank::ValidationError(std::string(path) + ": " + e.what());
    }
    *out = new unirank_model{std::move(model), std::string()};
  });
}

unirank_status unirank_model_predict(const unirank_model* m, const unirank_dataset* d,
                                     size_t query_index, double* scores, size_t capacity) {
  if (any_null(m, d, scores)) return null_argument();
  return guarded([&] {
    if (query_index >= d->data.queries().size()) {
      throw unirank::ValidationError("query index out of range");
    }
    const unirank::QueryGroup& q = d->data.queries()[query_index];
    if (capacity < q.size()) throw unirank::ValidationError("score buffer too small");
    if (d->data.feature_count() != m->model.feature_count) {
      throw unirank::ValidationError("data has " + std::to_string(d->data.feature_count()) +
                                     " features, model expects " +
                                     std::to_string(m->model.feature_count));
    }
    const std::vector<double> s = m->model.score(q);
    std::copy(s.begin(), s.end(), scores);
  });
}

void unirank_model_free(unirank_model* m) { delete m; }

unirank_status unirank_evaluate(const unirank_model* m, const unirank_dataset* d,
                                const size_t* cutoffs, size_t cutoff_count, const char* policy,
                                int max_grade, unirank_report** out) {
  if (any_null(m, d, out)) return null_argument();
  return guarded([&] {
    const auto options = eval_options(cutoffs, cutoff_count, policy, max_grade);
    const auto scores = unirank::score_dataset(m->model, d->data);
    *out = new unirank_report{unirank::evaluate_scores(d->data, scores, options)};
  });
}

unirank_status unirank_evaluate_scores(const unirank_dataset* d, const double* scores,
                                       size_t score_count, const size_t* cutoffs,
                                       size_t cutoff_count, const char* policy, int max_grade,
                                       unirank_report** out) {
  if (any_null(d, scores, out)) return null_argument();
  return guarded([&] {
    if (score_count != d->data.document_count()) {
      throw unirank::ValidationError("score count does not match the dataset");
    }
    const auto options = eval_options(cutoffs, cutoff_count, policy, max_grade);
    std::vector<std::vector<double>> per_query;
    const double* at = scores;
    for (const unirank::QueryGroup& q : d->data.queries()) {
      per_query.emplace_back(at, at + q.size());
      at += q.size();
    }
    *out = new unirank_report{unirank::evaluate_scores(d->data, per_query, options)};
  });
}

unirank_status unirank_report_ndcg(const unirank_report* r, size_t k, double* out) {
  if (any_null(r, out)) return null_argument();
  const auto it = r->report.ndcg_at.find(k);
  if (it == r->report.ndcg_at.end()) {
    return fail(UNIRANK_ERR_INVALID_ARGUMENT, "cutoff " + std::to_string(k) + " not evaluated");
  }
  *out = it->second;
  return UNIRANK_OK;
}

unirank_status unirank_report_err(const unirank_report* r, size_t k, double* out) {
  if (any_null(r, out)) return null_argument();
  const auto it = r->report.err_at.find(k);
  if (it == r->report.err_at.end()) {
    return fail(UNIRANK_ERR_INVALID_ARGUMENT, "cutoff " + std::to_string(k) + " not evaluated");
  }
  *out = it->second;
  return UNIRANK_OK;
}

unirank_status unirank_report_queries_evaluated(const unirank_report* r, size_t* out) {
  if (any_null(r, out)) return null_argument();
  *out = r->report.queries_evaluated;
  return UNIRANK_OK;
}

unirank_status unirank_report_to_tsv(const unirank_report* r, char** out) {
  if (any_null(r, out)) return null_argument();
  return guarded([&] { *out = copy_string(r->report.to_tsv()); });
}

void unirank_report_free(unirank_report* r) { delete r; }

unirank_status unirank_loss(const int* ratings, const double* scores, size_t n, size_t window,
                            double* out) {
  if (any_null(ratings, scores, out)) return null_argument();
  return guarded([&] {
    const auto partition = unirank::partition_unique_ratings(std::vector<int>(ratings, ratings + n));
    *out = unirank::loss(partition, std::span<const double>(scores, n), loss_config(window));
  });
}

unirank_status unirank_residuals(const int* ratings, const double* scores, size_t n,
                                 size_t window, double* out) {
  if (any_null(ratings, scores, out)) return null_argument();
  return guarded([&] {
    const auto partition = unirank::partition_unique_ratings(std::vector<int>(ratings, ratings + n));
    const auto r = unirank::residuals(partition, std::span<const double>(scores, n), loss_config(window));
    std::copy(r.begin(), r.end(), out);
  });
}

}  // extern "C"
