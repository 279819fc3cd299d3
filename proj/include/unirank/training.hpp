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

// Pieces shared by the neural trainers: optimizer, clipping, checkpoint
// selection and the training log.

#ifndef UNIRANK_TRAINING_HPP_
#define UNIRANK_TRAINING_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unirank/data.hpp"

namespace unirank {

using TensorRefs = std::vector<Eigen::MatrixXd*>;
using ConstTensorRefs = std::vector<const Eigen::MatrixXd*>;

// L2 norm of all entries of all tensors taken together.
double global_norm(const ConstTensorRefs& tensors);

// Rescales every tensor by max_norm / norm when the joint norm exceeds
// max_norm. Returns the norm before clipping.
double clip_global_norm(const TensorRefs& grads, double max_norm);

// Uniform in +-sqrt(6 / (fan_in + fan_out)), drawn row by row.
Eigen::MatrixXd glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng);

struct AdamState {
  std::vector<Eigen::MatrixXd> first_moment;
  std::vector<Eigen::MatrixXd> second_moment;
  std::int64_t step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

AdamState make_adam_state(const ConstTensorRefs& params);

// One bias-corrected Adam update of `params` in place.
void adam_step(const TensorRefs& params, const ConstTensorRefs& grads, AdamState& state,
               double learning_rate);

struct NeuralConfig {
  double learning_rate = 1e-4;
  std::size_t max_epochs = 1000;
  std::size_t patience = 200;
  double grad_clip_norm = 5.0;
  std::vector<std::size_t> cutoffs{1, 3, 5, 10};
  double selection_tolerance = 1e-6;
  std::size_t hidden1 = 100;
  std::size_t hidden2 = 50;
  // RNN state width for the conditional scorer; 0 means hidden2.
  std::size_t rnn_hidden = 0;
  bool final_activation = true;
  std::size_t max_learners = 5;
  std::uint64_t seed = 1;
};

// Validation NDCG at the configured cutoffs, compared lexicographically.
struct SelectionKey {
  std::vector<double> ndcg;

  bool empty() const { return ndcg.empty(); }
};

// True iff at the first cutoff where |a - b| > tolerance, a is larger.
bool key_improves(const SelectionKey& candidate, const SelectionKey& incumbent,
                  double tolerance);

SelectionKey selection_key(const Dataset& valid, const std::vector<std::vector<double>>& scores,
                           const std::vector<std::size_t>& cutoffs);

struct LogRecord {
  std::size_t learner = 1;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  SelectionKey key;
};

struct TrainingLog {
  std::vector<LogRecord> records;

  // One line per record: learner, epoch, train loss, comma-joined key.
  std::string to_text() const;
};

// A query prepared for training: features, ratings and partition.
struct PreparedQuery {
  Eigen::MatrixXd features;
  std::vector<Rating> ratings;
  UniqueRatingPartition partition;
};

// Training queries with at least two rating levels; throws ValidationError
// when none remain.
std::vector<PreparedQuery> prepare_training_queries(const Dataset& train);
std::vector<Eigen::MatrixXd> feature_matrices(const Dataset& dataset);

// Generic epoch loop with checkpoint selection and patience.
//  `run_epoch(epoch)` trains one epoch and returns the mean training loss.
//  `validate()` returns the current validation key.
//  `snapshot()` is called whenever the key improves.
struct EpochLoopResult {
  SelectionKey best_key;
  std::size_t epochs_run = 0;
};
EpochLoopResult run_epoch_loop(const NeuralConfig& config, std::size_t learner,
                               const std::function<double(std::size_t)>& run_epoch,
                               const std::function<SelectionKey()>& validate,
                               const std::function<void()>& snapshot, TrainingLog& log);

}  // namespace unirank

#endif  // UNIRANK_TRAINING_HPP_
