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

// Conditional scorer for urBoost. Documents are embedded by two ELU layers,
// x~ = elu(elu(X W1) W2). Teacher-forced over the rating levels of a query,
// step t scores every d in s_t from the shared state h_{t-1}:
//
//   h~_t(d) = tanh(x~(d) Wx + h_{t-1} Wh + b)
//   f_t(d)  = [h~_t(d), x~(d)] w
//   h_t     = elementwise max of h~_t(d) over d in c_t,   h_0 = 0

#ifndef UNIRANK_RNN_HPP_
#define UNIRANK_RNN_HPP_

#include <cstddef>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "unirank/data.hpp"
#include "unirank/training.hpp"

namespace unirank {

struct RnnScorerParams {
  Eigen::MatrixXd w1;  // l x k1
  Eigen::MatrixXd w2;  // k1 x k2
  Eigen::MatrixXd wx;  // k2 x h
  Eigen::MatrixXd wh;  // h x h
  Eigen::MatrixXd b;   // 1 x h
  Eigen::MatrixXd w;   // (h + k2) x 1, state half first

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
  std::size_t embedding_dim() const { return static_cast<std::size_t>(w2.cols()); }
  std::size_t state_dim() const { return static_cast<std::size_t>(wh.rows()); }
  TensorRefs tensors() { return {&w1, &w2, &wx, &wh, &b, &w}; }
  ConstTensorRefs tensors() const { return {&w1, &w2, &wx, &wh, &b, &w}; }
};

// Glorot-uniform matrices, zero bias.
RnnScorerParams init_rnn_scorer(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                                std::size_t state_dim, std::mt19937_64& rng);

struct RnnStepCache {
  std::vector<std::size_t> rows;  // c_t followed by s~_t
  std::size_t selected = 0;       // leading rows that belong to c_t
  Eigen::RowVectorXd h_prev;
  Eigen::MatrixXd state;          // h~_t for `rows`
  std::vector<std::size_t> argmax;  // per state unit, position in `rows`
};

struct RnnCache {
  Eigen::MatrixXd input, z1, a1, z2, embedding;
  std::vector<RnnStepCache> steps;
};

// One full-length score vector per scoring step; entries outside s_t are 0.
std::vector<std::vector<double>> rnn_conditional_scores(const RnnScorerParams& params,
                                                        const UniqueRatingPartition& partition,
                                                        const Eigen::MatrixXd& x,
                                                        RnnCache* cache = nullptr);

// Gradients of sum_t upstream[t] . f_t through the unrolled steps and the
// embedding. Pooling routes to the argmax row, ties to the lowest index.
RnnScorerParams rnn_backward(const RnnScorerParams& params, const RnnCache& cache,
                             const std::vector<std::vector<double>>& upstream);

struct InferenceStats {
  std::size_t cell_applications = 0;
};

// Scores from the zero initial state; ratings are not consulted.
Eigen::VectorXd rnn_first_step_scores(const RnnScorerParams& params, const Eigen::MatrixXd& x,
                                      InferenceStats* stats = nullptr);

}  // namespace unirank

#endif  // UNIRANK_RNN_HPP_
