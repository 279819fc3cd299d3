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

#include "unirank/training.hpp"

#include <cmath>
#include <cstdio>

#include "unirank/errors.hpp"
#include "unirank/metrics.hpp"

namespace unirank {

double global_norm(const ConstTensorRefs& tensors) {
  double sq = 0.0;
  for (const Eigen::MatrixXd* t : tensors) sq += t->squaredNorm();
  return std::sqrt(sq);
}

double clip_global_norm(const TensorRefs& grads, double max_norm) {
  const double norm = global_norm(ConstTensorRefs(grads.begin(), grads.end()));
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Eigen::MatrixXd* g : grads) *g *= scale;
  }
  return norm;
}

Eigen::MatrixXd glorot_uniform(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Eigen::MatrixXd w(static_cast<Eigen::Index>(fan_in), static_cast<Eigen::Index>(fan_out));
  // Row-major fill so the draw order does not depend on Eigen's storage.
  for (Eigen::Index i = 0; i < w.rows(); ++i) {
    for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = dist(rng);
  }
  return w;
}

AdamState make_adam_state(const ConstTensorRefs& params) {
  AdamState state;
  for (const Eigen::MatrixXd* p : params) {
    state.first_moment.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
    state.second_moment.push_back(Eigen::MatrixXd::Zero(p->rows(), p->cols()));
  }
  return state;
}

void adam_step(const TensorRefs& params, const ConstTensorRefs& grads, AdamState& state,
               double learning_rate) {
  if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
    throw ContractViolation("adam: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Eigen::MatrixXd& m = state.first_moment[i];
    Eigen::MatrixXd& v = state.second_moment[i];
    const Eigen::MatrixXd& g = *grads[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const Eigen::ArrayXXd m_hat = m.array() / correction1;
    const Eigen::ArrayXXd v_hat = v.array() / correction2;
    params[i]->array() -= learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
  }
}

bool key_improves(const SelectionKey& candidate, const SelectionKey& incumbent,
                  double tolerance) {
  if (incumbent.empty()) return !candidate.empty();
  const std::size_t n = std::min(candidate.ndcg.size(), incumbent.ndcg.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(candidate.ndcg[i] - incumbent.ndcg[i]) > tolerance) {
      return candidate.ndcg[i] > incumbent.ndcg[i];
    }
  }
  return false;
}

SelectionKey selection_key(const Dataset& valid, const std::vector<std::vector<double>>& scores,
                           const std::vector<std::size_t>& cutoffs) {
  EvalOptions options;
  options.cutoffs = cutoffs;
  const EvalReport report = evaluate_scores(valid, scores, options);
  SelectionKey key;
  for (std::size_t k : cutoffs) key.ndcg.push_back(report.ndcg_at.at(k));
  return key;
}

std::string TrainingLog::to_text() const {
  std::string out;
  char buf[64];
  for (const LogRecord& r : records) {
    std::snprintf(buf, sizeof(buf), "%zu\t%zu\t%.10g\t", r.learner, r.epoch, r.train_loss);
    out += buf;
    for (std::size_t i = 0; i < r.key.ndcg.size(); ++i) {
      std::snprintf(buf, sizeof(buf), i == 0 ? "%.6f" : ",%.6f", r.key.ndcg[i]);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

std::vector<PreparedQuery> prepare_training_queries(const Dataset& train) {
  if (train.empty()) throw ValidationError("training set is empty");
  std::vector<PreparedQuery> out;
  for (const QueryGroup& q : train.queries()) {
    if (q.unique_ratings().size() < 2) continue;
    out.push_back(PreparedQuery{q.feature_matrix(), q.ratings(), partition_unique_ratings(q)});
  }
  if (out.empty()) {
    throw ValidationError("training set has no query with two or more rating levels");
  }
  return out;
}

std::vector<Eigen::MatrixXd> feature_matrices(const Dataset& dataset) {
  std::vector<Eigen::MatrixXd> out;
  out.reserve(dataset.queries().size());
  for (const QueryGroup& q : dataset.queries()) out.push_back(q.feature_matrix());
  return out;
}

EpochLoopResult run_epoch_loop(const NeuralConfig& config, std::size_t learner,
                               const std::function<double(std::size_t)>& run_epoch,
                               const std::function<SelectionKey()>& validate,
                               const std::function<void()>& snapshot, TrainingLog& log) {
  EpochLoopResult result;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const double train_loss = run_epoch(epoch);
    SelectionKey key = validate();
    log.records.push_back(LogRecord{learner, epoch, train_loss, key});
    result.epochs_run = epoch;
    if (key_improves(key, result.best_key, config.selection_tolerance)) {
      result.best_key = std::move(key);
      snapshot();
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  return result;
}

}  // namespace unirank
