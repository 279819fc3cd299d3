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

// uBoost and urBoost: additive ensembles of neural weak learners. The first
// learner is fit to the unique-rating loss; every later one regresses the
// loss residuals of the current ensemble with squared error. All ensemble
// coefficients are 1.

#ifndef UNIRANK_BOOSTING_HPP_
#define UNIRANK_BOOSTING_HPP_

#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "unirank/data.hpp"
#include "unirank/mlp.hpp"
#include "unirank/rnn.hpp"
#include "unirank/training.hpp"

namespace unirank {

enum class LearnerKind { kMlp, kRnn };

struct NeuralEnsemble {
  LearnerKind kind = LearnerKind::kMlp;
  std::vector<MlpParams> mlp_learners;
  std::vector<RnnScorerParams> rnn_learners;
  std::vector<double> coefficients;

  std::size_t size() const { return coefficients.size(); }
  std::size_t input_dim() const;
  // sum_m rho_m f_m(X); RNN learners score from the zero initial state.
  Eigen::VectorXd score(const Eigen::MatrixXd& x, InferenceStats* stats = nullptr) const;
};

// Mean over entries of (target - prediction)^2.
double residual_mse_loss(std::span<const double> targets, std::span<const double> predictions);

struct BoostResult {
  NeuralEnsemble ensemble;
  SelectionKey best_key;
  // Best validation key reached by each learner that was trained, including
  // a rejected final one.
  std::vector<SelectionKey> learner_keys;
  TrainingLog log;
};

BoostResult uboost_train(const Dataset& train, const Dataset& valid, const NeuralConfig& config);
BoostResult urboost_train(const Dataset& train, const Dataset& valid, const NeuralConfig& config);

Eigen::VectorXd urboost_infer(const NeuralEnsemble& ensemble, const Eigen::MatrixXd& x,
                              InferenceStats* stats = nullptr);

}  // namespace unirank

#endif  // UNIRANK_BOOSTING_HPP_
