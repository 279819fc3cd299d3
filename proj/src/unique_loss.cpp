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

#include "unirank/unique_loss.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Dense>

#include "unirank/errors.hpp"
#include "unirank/metrics.hpp"

namespace unirank {

double neg_log_softmax_against(double self, std::span<const double> others) {
  double shift = 0.0;
  for (double o : others) shift = std::max(shift, o - self);
  if (shift == 0.0) {
    double sum = 0.0;
    for (double o : others) sum += std::exp(o - self);
    return std::log1p(sum);
  }
  double sum = std::exp(-shift);
  for (double o : others) sum += std::exp(o - self - shift);
  return shift + std::log(sum);
}

std::vector<std::vector<std::size_t>> score_windows(std::span<const std::size_t> lower,
                                                    std::span<const double> scores,
                                                    std::size_t window) {
  if (window == 0) throw ContractViolation("window size must be >= 1");
  std::vector<std::size_t> sorted(lower.begin(), lower.end());
  std::stable_sort(sorted.begin(), sorted.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b] || (scores[a] == scores[b] && a < b);
  });
  std::vector<std::vector<std::size_t>> windows;
  for (std::size_t i = 0; i < sorted.size(); i += window) {
    const std::size_t end = std::min(sorted.size(), i + window);
    windows.emplace_back(sorted.begin() + static_cast<std::ptrdiff_t>(i),
                         sorted.begin() + static_cast<std::ptrdiff_t>(end));
    // Membership is what matters; index order keeps a single window
    // bit-identical to the unwindowed pool.
    std::sort(windows.back().begin(), windows.back().end());
  }
  return windows;
}

namespace {

void check_scores(const UniqueRatingPartition& partition, std::span<const double> scores) {
  if (scores.size() != partition.document_count) {
    throw ValidationError("score vector length " + std::to_string(scores.size()) +
                          " does not match query size " +
                          std::to_string(partition.document_count));
  }
}

void check_step_doc(const UniqueRatingPartition& partition, std::size_t step, std::size_t doc) {
  if (step + 1 >= partition.levels()) {
    throw ContractViolation("step " + std::to_string(step) +
                            " is not a scoring step (|R| = " +
                            std::to_string(partition.levels()) + ")");
  }
  const auto& selected = partition.steps[step].selected;
  if (std::find(selected.begin(), selected.end(), doc) == selected.end()) {
    throw ContractViolation("document " + std::to_string(doc) + " is not rated r_t at step " +
                            std::to_string(step));
  }
}

std::vector<double> gather(std::span<const double> scores, std::span<const std::size_t> idx) {
  std::vector<double> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(scores[i]);
  return out;
}

// Denominator pools for one step: the whole lower set, or its windows.
std::vector<std::vector<std::size_t>> step_pools(const PartitionStep& step,
                                                 std::span<const double> scores,
                                                 const LossConfig& config) {
  if (!config.window || step.lower.empty()) return {step.lower};
  return score_windows(step.lower, scores, *config.window);
}

double step_weight(const UniqueRatingPartition& partition, std::size_t step) {
  return rating_gain(partition.steps[step].rating) /
         static_cast<double>(partition.levels() - 1);
}

double step_loss_impl(const UniqueRatingPartition& partition, std::size_t step,
                      std::span<const double> scores, const LossConfig& config) {
  const PartitionStep& s = partition.steps[step];
  double sum = 0.0;
  for (const auto& pool : step_pools(s, scores, config)) {
    const auto pool_scores = gather(scores, pool);
    for (std::size_t d : s.selected) sum += neg_log_softmax_against(scores[d], pool_scores);
  }
  return step_weight(partition, step) * sum;
}

void add_step_residuals(const UniqueRatingPartition& partition, std::size_t step,
                        std::span<const double> scores, const LossConfig& config,
                        std::vector<double>& out) {
  const PartitionStep& s = partition.steps[step];
  const double w = step_weight(partition, step);
  for (const auto& pool : step_pools(s, scores, config)) {
    const auto pool_scores = gather(scores, pool);
    for (std::size_t d : s.selected) {
      const double nll = neg_log_softmax_against(scores[d], pool_scores);
      // 1 - P = (sum over pool) / (e^f(d) + sum over pool)
      out[d] += w * -std::expm1(-nll);
      for (std::size_t j : pool) out[j] -= w * std::exp(scores[j] - scores[d] - nll);
    }
  }
}

}  // namespace

double likelihood(const UniqueRatingPartition& partition, std::span<const double> scores,
                  std::size_t step, std::size_t doc) {
  check_scores(partition, scores);
  check_step_doc(partition, step, doc);
  const auto pool = gather(scores, partition.steps[step].lower);
  return std::exp(-neg_log_softmax_against(scores[doc], pool));
}

double likelihood_windowed(const UniqueRatingPartition& partition,
                           std::span<const double> scores, std::size_t step,
                           std::size_t doc, std::size_t window) {
  check_scores(partition, scores);
  check_step_doc(partition, step, doc);
  double nll = 0.0;
  for (const auto& pool : score_windows(partition.steps[step].lower, scores, window)) {
    nll += neg_log_softmax_against(scores[doc], gather(scores, pool));
  }
  return std::exp(-nll);
}

double loss(const UniqueRatingPartition& partition, std::span<const double> scores,
            const LossConfig& config) {
  check_scores(partition, scores);
  if (config.window && *config.window == 0) throw ContractViolation("window size must be >= 1");
  double total = 0.0;
  for (std::size_t t = 0; t < partition.scoring_steps(); ++t) {
    total += step_loss_impl(partition, t, scores, config);
  }
  return total;
}

double step_loss(const UniqueRatingPartition& partition, std::size_t step,
                 std::span<const double> scores) {
  check_scores(partition, scores);
  if (step >= partition.scoring_steps()) throw ContractViolation("not a scoring step");
  return step_loss_impl(partition, step, scores, {});
}

std::vector<double> step_residuals(const UniqueRatingPartition& partition, std::size_t step,
                                   std::span<const double> scores) {
  check_scores(partition, scores);
  if (step >= partition.scoring_steps()) throw ContractViolation("not a scoring step");
  std::vector<double> out(scores.size(), 0.0);
  add_step_residuals(partition, step, scores, {}, out);
  return out;
}

std::vector<double> residuals(const UniqueRatingPartition& partition,
                              std::span<const double> scores, const LossConfig& config) {
  check_scores(partition, scores);
  if (config.window && *config.window == 0) throw ContractViolation("window size must be >= 1");
  std::vector<double> out(scores.size(), 0.0);
  for (std::size_t t = 0; t < partition.scoring_steps(); ++t) {
    add_step_residuals(partition, t, scores, config, out);
  }
  return out;
}

namespace {

struct TensorTerms {
  Eigen::ArrayXd gains;
  // mask(i, j) = 1 iff rating_i > rating_j.
  Eigen::ArrayXXd mask;
  // ln(1 + T_i / e^F_i), T_i the exp-score mass rated below document i.
  Eigen::ArrayXd nll;
  std::size_t levels = 0;
};

TensorTerms tensor_terms(std::span<const Rating> ratings, std::span<const double> scores) {
  if (ratings.size() != scores.size()) {
    throw ValidationError("ratings and scores differ in length");
  }
  const auto n = static_cast<Eigen::Index>(ratings.size());
  Eigen::ArrayXd y(n), f(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i) = ratings[static_cast<std::size_t>(i)];
    f(i) = scores[static_cast<std::size_t>(i)];
  }
  TensorTerms terms;
  terms.gains = y.unaryExpr([](double r) { return std::exp2(r) - 1.0; });
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(n);
  const Eigen::ArrayXXd diff = (y.matrix() * ones.matrix().transpose() -
                                ones.matrix() * y.matrix().transpose()).array();
  terms.mask = (diff > 0.0).cast<double>();

  // Row i holds f_j - f_i; masked entries are pushed to -inf.
  const Eigen::ArrayXXd rel = (ones.matrix() * f.matrix().transpose() -
                               f.matrix() * ones.matrix().transpose()).array();
  const Eigen::ArrayXXd masked =
      (terms.mask > 0.0).select(rel, -std::numeric_limits<double>::infinity());
  const Eigen::ArrayXd shift = masked.rowwise().maxCoeff().max(0.0);
  const Eigen::ArrayXXd shifted = masked.colwise() - shift;
  terms.nll = shift + ((-shift).exp() + shifted.exp().rowwise().sum()).log();

  std::vector<Rating> levels(ratings.begin(), ratings.end());
  std::sort(levels.begin(), levels.end());
  terms.levels = static_cast<std::size_t>(std::unique(levels.begin(), levels.end()) - levels.begin());
  return terms;
}

}  // namespace

double loss_vectorized(std::span<const Rating> ratings, std::span<const double> scores) {
  if (ratings.empty()) return 0.0;
  const TensorTerms terms = tensor_terms(ratings, scores);
  if (terms.levels <= 1) return 0.0;
  return (terms.nll * terms.gains).sum() / static_cast<double>(terms.levels - 1);
}

std::vector<double> residuals_vectorized(std::span<const Rating> ratings,
                                         std::span<const double> scores) {
  std::vector<double> out(scores.size(), 0.0);
  if (ratings.empty()) return out;
  const TensorTerms terms = tensor_terms(ratings, scores);
  if (terms.levels <= 1) return out;
  const auto n = static_cast<Eigen::Index>(ratings.size());
  Eigen::ArrayXd f(n);
  for (Eigen::Index i = 0; i < n; ++i) f(i) = scores[static_cast<std::size_t>(i)];

  // Z = G / (1 + e^F / T) = G (1 - P); zero where T = 0.
  const Eigen::ArrayXd z = terms.gains * -(-terms.nll).unaryExpr([](double v) {
    return std::expm1(v);
  });
  // Z'_i = -sum_{j rated above i} G_j e^F_i / (T_j + e^F_j)
  //      = -sum_j mask(j, i) G_j exp(F_i - F_j - nll_j).
  const Eigen::ArrayXd log_weight = terms.gains.log() - f - terms.nll;
  Eigen::ArrayXd z_prime = Eigen::ArrayXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (terms.mask(j, i) > 0.0) acc += std::exp(f(i) + log_weight(j));
    }
    z_prime(i) = -acc;
  }
  const Eigen::ArrayXd total = (z + z_prime) / static_cast<double>(terms.levels - 1);
  for (Eigen::Index i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = total(i);
  return out;
}

}  // namespace unirank
