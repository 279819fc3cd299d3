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

// Unique-rating listwise loss.
//
// A query with distinct ratings r_1 > ... > r_|R| is ranked in |R| - 1
// selection steps. At step t every document d rated r_t is scored by its own
// softmax against the strictly lower-rated pool s~_t:
//
//   P_t(d) = e^f(d) / (e^f(d) + sum_{d' in s~_t} e^f(d'))
//   L      = -1/(|R|-1) * sum_t (2^r_t - 1) * sum_{d in c_t} ln P_t(d)
//
// The windowed variant splits s~_t (sorted by score, descending) into
// consecutive chunks of u documents and multiplies one softmax per chunk.
//
// Step indices in this API are 0-based: step t here is step t + 1 of the
// usual 1-based notation, and the scoring steps are 0 .. |R| - 2.
//
// Every softmax is evaluated as -ln P = log(1 + sum e^(f(d') - f(d))) with a
// max shift, so the raw exponentials never overflow.

#ifndef UNIRANK_UNIQUE_LOSS_HPP_
#define UNIRANK_UNIQUE_LOSS_HPP_

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "unirank/data.hpp"

namespace unirank {

struct LossConfig {
  // nullopt: one softmax over all of s~_t. Otherwise the window size u >= 1.
  std::optional<std::size_t> window;
};

// -ln( e^a / (e^a + sum_j e^b_j) ), stable for any magnitude.
double neg_log_softmax_against(double self, std::span<const double> others);

// Splits `lower` into score-descending chunks of `window` documents; the
// last chunk holds the remainder. Score ties keep document index order.
std::vector<std::vector<std::size_t>> score_windows(std::span<const std::size_t> lower,
                                                    std::span<const double> scores,
                                                    std::size_t window);

double likelihood(const UniqueRatingPartition& partition, std::span<const double> scores,
                  std::size_t step, std::size_t doc);

double likelihood_windowed(const UniqueRatingPartition& partition,
                           std::span<const double> scores, std::size_t step,
                           std::size_t doc, std::size_t window);

double loss(const UniqueRatingPartition& partition, std::span<const double> scores,
            const LossConfig& config = {});

// Tensorized loss over an n x n rating mask; unwindowed semantics.
double loss_vectorized(std::span<const Rating> ratings, std::span<const double> scores);

// -dL/dF per document. With a window, the chunk assignment is frozen at
// the given scores.
std::vector<double> residuals(const UniqueRatingPartition& partition,
                              std::span<const double> scores, const LossConfig& config = {});

// Tensorized residuals (unwindowed).
std::vector<double> residuals_vectorized(std::span<const Rating> ratings,
                                         std::span<const double> scores);

// Contribution of one scoring step to the loss, including the
// (2^r_t - 1)/(|R| - 1) weight. Scores outside s_t are ignored. Used when
// every step has its own score vector (conditional scoring).
double step_loss(const UniqueRatingPartition& partition, std::size_t step,
                 std::span<const double> scores);

// -d step_loss / dF; zero outside s_t.
std::vector<double> step_residuals(const UniqueRatingPartition& partition, std::size_t step,
                                   std::span<const double> scores);

}  // namespace unirank

#endif  // UNIRANK_UNIQUE_LOSS_HPP_
