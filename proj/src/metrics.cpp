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

#include "unirank/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>

#include "unirank/errors.hpp"

namespace unirank {

ZeroLabelPolicy parse_zero_label_policy(const std::string& name) {
  if (name == "skip") return ZeroLabelPolicy::kSkip;
  if (name == "one") return ZeroLabelPolicy::kOne;
  throw ValidationError("unknown zero-label policy '" + name + "' (expected skip|one)");
}

std::string to_string(ZeroLabelPolicy policy) {
  return policy == ZeroLabelPolicy::kSkip ? "skip" : "one";
}

double rating_gain(Rating r) { return std::ldexp(1.0, r) - 1.0; }

std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  return order;
}

double dcg_at_k(std::span<const Rating> ratings_in_ranked_order, std::size_t k) {
  if (k == 0) throw ContractViolation("dcg cutoff must be >= 1");
  const std::size_t limit = std::min(k, ratings_in_ranked_order.size());
  double dcg = 0.0;
  for (std::size_t i = 0; i < limit; ++i) {
    dcg += rating_gain(ratings_in_ranked_order[i]) / std::log2(static_cast<double>(i) + 2.0);
  }
  return dcg;
}

namespace {

void check_aligned(std::span<const double> scores, std::span<const Rating> ratings) {
  if (scores.size() != ratings.size()) {
    throw ValidationError("scores and ratings differ in length (" +
                          std::to_string(scores.size()) + " vs " +
                          std::to_string(ratings.size()) + ")");
  }
}

std::vector<Rating> ranked_ratings(std::span<const double> scores,
                                   std::span<const Rating> ratings) {
  std::vector<Rating> out;
  out.reserve(ratings.size());
  for (std::size_t i : rank_by_score(scores)) out.push_back(ratings[i]);
  return out;
}

}  // namespace

std::optional<double> ndcg_at_k(std::span<const double> scores,
                                std::span<const Rating> ratings, std::size_t k,
                                ZeroLabelPolicy policy) {
  check_aligned(scores, ratings);
  std::vector<Rating> ideal(ratings.begin(), ratings.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  const double idcg = dcg_at_k(ideal, k);
  if (idcg <= 0.0) {
    if (policy == ZeroLabelPolicy::kOne) return 1.0;
    return std::nullopt;
  }
  return dcg_at_k(ranked_ratings(scores, ratings), k) / idcg;
}

double err_at_k(std::span<const double> scores, std::span<const Rating> ratings,
                std::size_t k, Rating max_grade) {
  check_aligned(scores, ratings);
  if (k == 0) throw ContractViolation("err cutoff must be >= 1");
  const double denom = std::ldexp(1.0, max_grade);
  const auto ranked = ranked_ratings(scores, ratings);
  const std::size_t limit = std::min(k, ranked.size());
  double err = 0.0;
  double not_stopped = 1.0;
  for (std::size_t i = 0; i < limit; ++i) {
    if (ranked[i] > max_grade) {
      throw ValidationError("rating " + std::to_string(ranked[i]) + " exceeds max grade " +
                            std::to_string(max_grade));
    }
    const double stop = rating_gain(ranked[i]) / denom;
    err += not_stopped * stop / static_cast<double>(i + 1);
    not_stopped *= 1.0 - stop;
  }
  return err;
}

std::string EvalReport::to_tsv() const {
  std::string out = "metric";
  char buf[32];
  for (const auto& [k, v] : ndcg_at) out += "\t@" + std::to_string(k);
  out += "\n";
  auto row = [&](const char* name, const std::map<std::size_t, double>& values) {
    out += name;
    for (const auto& [k, v] : values) {
      std::snprintf(buf, sizeof(buf), "\t%.4f", v);
      out += buf;
    }
    out += "\n";
  };
  row("NDCG", ndcg_at);
  row("ERR", err_at);
  return out;
}

EvalReport evaluate_scores(const Dataset& dataset,
                           const std::vector<std::vector<double>>& scores,
                           const EvalOptions& options) {
  if (dataset.empty()) throw ValidationError("cannot evaluate an empty dataset");
  if (scores.size() != dataset.queries().size()) {
    throw ValidationError("score lists do not match the number of queries");
  }
  if (options.cutoffs.empty()) throw ValidationError("no metric cutoffs given");
  const Rating max_grade = options.max_grade.value_or(dataset.max_rating());
  if (max_grade < dataset.max_rating()) {
    throw ValidationError("max grade " + std::to_string(max_grade) +
                          " is below the dataset's largest rating");
  }

  EvalReport report;
  for (std::size_t k : options.cutoffs) {
    report.ndcg_at[k] = 0.0;
    report.err_at[k] = 0.0;
  }
  for (std::size_t q = 0; q < dataset.queries().size(); ++q) {
    const QueryGroup& group = dataset.queries()[q];
    const auto ratings = group.ratings();
    if (group.max_rating() == 0 && options.policy == ZeroLabelPolicy::kSkip) {
      ++report.queries_skipped_all_zero;
      continue;
    }
    ++report.queries_evaluated;
    for (std::size_t k : options.cutoffs) {
      report.ndcg_at[k] += ndcg_at_k(scores[q], ratings, k, options.policy).value_or(0.0);
      report.err_at[k] += err_at_k(scores[q], ratings, k, max_grade);
    }
  }
  if (report.queries_evaluated > 0) {
    const auto n = static_cast<double>(report.queries_evaluated);
    for (auto& [k, v] : report.ndcg_at) v /= n;
    for (auto& [k, v] : report.err_at) v /= n;
  }
  return report;
}

EvalReport evaluate(const Dataset& dataset, const QueryScorer& scorer,
                    const EvalOptions& options) {
  if (dataset.empty()) throw ValidationError("cannot evaluate an empty dataset");
  std::vector<std::vector<double>> scores;
  scores.reserve(dataset.queries().size());
  for (const QueryGroup& group : dataset.queries()) {
    scores.push_back(scorer(group));
    if (scores.back().size() != group.size()) {
      throw ValidationError("scorer returned " + std::to_string(scores.back().size()) +
                            " scores for query " + group.query_id() + " of size " +
                            std::to_string(group.size()));
    }
  }
  return evaluate_scores(dataset, scores, options);
}

}  // namespace unirank
