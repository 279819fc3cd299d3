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

#ifndef UNIRANK_METRICS_HPP_
#define UNIRANK_METRICS_HPP_

#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unirank/data.hpp"

namespace unirank {

// How NDCG treats a query whose ideal DCG is zero (all ratings 0).
enum class ZeroLabelPolicy {
  kSkip,  // leave the query out of every average
  kOne,   // NDCG = 1 at every cutoff, as LightGBM reports it
};

ZeroLabelPolicy parse_zero_label_policy(const std::string& name);
std::string to_string(ZeroLabelPolicy policy);

// Gain 2^r - 1.
double rating_gain(Rating r);

// Document indices sorted by score descending; ties keep index order.
std::vector<std::size_t> rank_by_score(std::span<const double> scores);

double dcg_at_k(std::span<const Rating> ratings_in_ranked_order, std::size_t k);

// nullopt is the skip marker for a zero ideal DCG under kSkip.
std::optional<double> ndcg_at_k(std::span<const double> scores,
                                std::span<const Rating> ratings, std::size_t k,
                                ZeroLabelPolicy policy = ZeroLabelPolicy::kSkip);

// Cascade ERR with stop probability (2^r - 1) / 2^max_grade.
double err_at_k(std::span<const double> scores, std::span<const Rating> ratings,
                std::size_t k, Rating max_grade);

struct EvalReport {
  std::map<std::size_t, double> ndcg_at;
  std::map<std::size_t, double> err_at;
  std::size_t queries_evaluated = 0;
  std::size_t queries_skipped_all_zero = 0;

  // Rows are metrics, columns are cutoffs, 4 decimals.
  std::string to_tsv() const;
};

using QueryScorer = std::function<std::vector<double>(const QueryGroup&)>;

struct EvalOptions {
  std::vector<std::size_t> cutoffs{1, 3, 5, 10};
  ZeroLabelPolicy policy = ZeroLabelPolicy::kSkip;
  // Defaults to the dataset's largest rating.
  std::optional<Rating> max_grade;
};

EvalReport evaluate(const Dataset& dataset, const QueryScorer& scorer,
                    const EvalOptions& options = {});

// Evaluates precomputed per-query scores (aligned with dataset.queries()).
EvalReport evaluate_scores(const Dataset& dataset,
                           const std::vector<std::vector<double>>& scores,
                           const EvalOptions& options = {});

}  // namespace unirank

#endif  // UNIRANK_METRICS_HPP_
