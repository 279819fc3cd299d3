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

#include "unirank/boosting.hpp"

#include <algorithm>
#include <numeric>
#include <random>

#include "unirank/errors.hpp"
#include "unirank/unique_loss.hpp"

namespace unirank {

namespace {

using ScoreTable = std::vector<std::vector<double>>;

std::vector<double> to_vector(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

void add_into(std::vector<double>& acc, const Eigen::VectorXd& v) {
  for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += v(static_cast<Eigen::Index>(i));
}

ScoreTable plus(const ScoreTable& base, const std::vector<Eigen::VectorXd>& extra) {
  ScoreTable out = base;
  for (std::size_t q = 0; q < out.size(); ++q) add_into(out[q], extra[q]);
  return out;
}

std::uint64_t learner_seed(const NeuralConfig& config, std::size_t learner) {
  return config.seed + learner - 1;
}

void check_boost_config(const NeuralConfig& config) {
  if (config.max_learners == 0) throw ValidationError("max_learners must be at least 1");
}

// Residual-fitting loop shared by both ensembles. `Params` is the weak
// learner type; `fit_query(params, q)` accumulates gradients for one query
// and returns its loss; `valid_scores(params)` scores the validation set.
template <typename Params, typename FitQuery, typename ValidScores>
EpochLoopResult train_learner(Params& params, Params& best, std::size_t count,
                              const NeuralConfig& config, std::size_t learner,
                              const ScoreTable& valid_base, const Dataset& valid, TrainingLog& log,
                              FitQuery fit_query, ValidScores valid_scores, std::mt19937_64& rng) {
  AdamState adam = make_adam_state(std::as_const(params).tensors());
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  best = params;
  auto run_epoch = [&](std::size_t) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t qi : order) {
      Params grads;
      total += fit_query(params, qi, grads);
      clip_global_norm(grads.tensors(), config.grad_clip_norm);
      adam_step(params.tensors(), std::as_const(grads).tensors(), adam, config.learning_rate);
    }
    return total / static_cast<double>(count);
  };
  auto validate = [&] {
    return selection_key(valid, plus(valid_base, valid_scores(params)), config.cutoffs);
  };
  auto snapshot = [&] { best = params; };
  return run_epoch_loop(config, learner, run_epoch, validate, snapshot, log);
}

}  // namespace

std::size_t NeuralEnsemble::input_dim() const {
  if (kind == LearnerKind::kMlp) return mlp_learners.empty() ? 0 : mlp_learners.front().input_dim();
  return rnn_learners.empty() ? 0 : rnn_learners.front().input_dim();
}

Eigen::VectorXd NeuralEnsemble::score(const Eigen::MatrixXd& x, InferenceStats* stats) const {
  Eigen::VectorXd total = Eigen::VectorXd::Zero(x.rows());
  for (std::size_t m = 0; m < size(); ++m) {
    if (kind == LearnerKind::kMlp) {
      total += coefficients[m] * mlp_forward(mlp_learners[m], x);
    } else {
      total += coefficients[m] * rnn_first_step_scores(rnn_learners[m], x, stats);
    }
  }
  return total;
}

double residual_mse_loss(std::span<const double> targets, std::span<const double> predictions) {
  if (targets.size() != predictions.size()) {
    throw ValidationError("targets and predictions differ in length");
  }
  if (targets.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    const double d = targets[i] - predictions[i];
    sum += d * d;
  }
  return sum / static_cast<double>(targets.size());
}

BoostResult uboost_train(const Dataset& train, const Dataset& valid, const NeuralConfig& config) {
  check_boost_config(config);
  UrankResult first = train_urank(train, valid, config);
  BoostResult result;
  result.ensemble.kind = LearnerKind::kMlp;
  result.ensemble.mlp_learners.push_back(first.params);
  result.ensemble.coefficients.push_back(1.0);
  result.best_key = first.best_key;
  result.learner_keys.push_back(first.best_key);
  result.log = std::move(first.log);

  const std::vector<PreparedQuery> queries = prepare_training_queries(train);
  const std::vector<Eigen::MatrixXd> valid_x = feature_matrices(valid);
  ScoreTable train_f, valid_f;
  for (const PreparedQuery& q : queries) train_f.push_back(to_vector(mlp_forward(first.params, q.features)));
  for (const Eigen::MatrixXd& x : valid_x) valid_f.push_back(to_vector(mlp_forward(first.params, x)));

  for (std::size_t m = 2; m <= config.max_learners; ++m) {
    ScoreTable targets;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      targets.push_back(residuals_vectorized(queries[q].ratings, train_f[q]));
    }
    std::mt19937_64 rng(learner_seed(config, m));
    MlpParams params = init_mlp(train.feature_count(), config.hidden1, config.hidden2,
                                config.final_activation, rng);
    MlpParams best;
    MlpCache cache;
    auto fit_query = [&](const MlpParams& p, std::size_t qi, MlpParams& grads) {
      const Eigen::VectorXd f = mlp_forward(p, queries[qi].features, &cache);
      const Eigen::VectorXd t = Eigen::Map<const Eigen::VectorXd>(
          targets[qi].data(), static_cast<Eigen::Index>(targets[qi].size()));
      const Eigen::VectorXd diff = f - t;
      grads = mlp_backward(p, cache, (2.0 / static_cast<double>(f.size())) * diff);
      return diff.squaredNorm() / static_cast<double>(f.size());
    };
    auto valid_scores = [&](const MlpParams& p) {
      std::vector<Eigen::VectorXd> out;
      for (const Eigen::MatrixXd& x : valid_x) out.push_back(mlp_forward(p, x));
      return out;
    };
    const EpochLoopResult loop =
        train_learner(params, best, queries.size(), config, m, valid_f, valid, result.log,
                      fit_query, valid_scores, rng);
    result.learner_keys.push_back(loop.best_key);
    if (!key_improves(loop.best_key, result.best_key, config.selection_tolerance)) break;

    result.best_key = loop.best_key;
    result.ensemble.mlp_learners.push_back(best);
    result.ensemble.coefficients.push_back(1.0);
    for (std::size_t q = 0; q < queries.size(); ++q) add_into(train_f[q], mlp_forward(best, queries[q].features));
    for (std::size_t q = 0; q < valid_x.size(); ++q) add_into(valid_f[q], mlp_forward(best, valid_x[q]));
  }
  return result;
}

BoostResult urboost_train(const Dataset& train, const Dataset& valid, const NeuralConfig& config) {
  check_boost_config(config);
  const std::vector<PreparedQuery> queries = prepare_training_queries(train);
  if (valid.empty()) throw ValidationError("validation set is empty");
  const std::vector<Eigen::MatrixXd> valid_x = feature_matrices(valid);
  const std::size_t state_dim = config.rnn_hidden == 0 ? config.hidden2 : config.rnn_hidden;

  BoostResult result;
  result.ensemble.kind = LearnerKind::kRnn;
  // Per query, per step: summed conditional scores of the accepted learners.
  std::vector<ScoreTable> train_steps(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    train_steps[q].assign(queries[q].partition.scoring_steps(),
                          std::vector<double>(queries[q].ratings.size(), 0.0));
  }
  ScoreTable valid_f;
  for (const Eigen::MatrixXd& x : valid_x) valid_f.emplace_back(static_cast<std::size_t>(x.rows()), 0.0);

  for (std::size_t m = 1; m <= config.max_learners; ++m) {
    std::vector<ScoreTable> targets(queries.size());
    if (m > 1) {
      for (std::size_t q = 0; q < queries.size(); ++q) {
        for (std::size_t t = 0; t < train_steps[q].size(); ++t) {
          targets[q].push_back(step_residuals(queries[q].partition, t, train_steps[q][t]));
        }
      }
    }
    std::mt19937_64 rng(learner_seed(config, m));
    RnnScorerParams params =
        init_rnn_scorer(train.feature_count(), config.hidden1, config.hidden2, state_dim, rng);
    RnnScorerParams best;
    RnnCache cache;
    auto fit_query = [&](const RnnScorerParams& p, std::size_t qi, RnnScorerParams& grads) {
      const PreparedQuery& q = queries[qi];
      const ScoreTable f = rnn_conditional_scores(p, q.partition, q.features, &cache);
      ScoreTable upstream(f.size());
      double value = 0.0;
      if (m == 1) {
        for (std::size_t t = 0; t < f.size(); ++t) {
          value += step_loss(q.partition, t, f[t]);
          upstream[t] = step_residuals(q.partition, t, f[t]);
          for (double& g : upstream[t]) g = -g;
        }
      } else {
        std::size_t count = 0;
        for (const RnnStepCache& s : cache.steps) count += s.rows.size();
        const double scale = 1.0 / static_cast<double>(count);
        for (std::size_t t = 0; t < f.size(); ++t) {
          upstream[t].assign(f[t].size(), 0.0);
          for (std::size_t d : cache.steps[t].rows) {
            const double diff = f[t][d] - targets[qi][t][d];
            value += diff * diff * scale;
            upstream[t][d] = 2.0 * diff * scale;
          }
        }
      }
      grads = rnn_backward(p, cache, upstream);
      return value;
    };
    auto valid_scores = [&](const RnnScorerParams& p) {
      std::vector<Eigen::VectorXd> out;
      for (const Eigen::MatrixXd& x : valid_x) out.push_back(rnn_first_step_scores(p, x));
      return out;
    };
    const EpochLoopResult loop =
        train_learner(params, best, queries.size(), config, m, valid_f, valid, result.log,
                      fit_query, valid_scores, rng);
    result.learner_keys.push_back(loop.best_key);
    if (m > 1 && !key_improves(loop.best_key, result.best_key, config.selection_tolerance)) break;

    result.best_key = loop.best_key;
    result.ensemble.rnn_learners.push_back(best);
    result.ensemble.coefficients.push_back(1.0);
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const ScoreTable f = rnn_conditional_scores(best, queries[q].partition, queries[q].features);
      for (std::size_t t = 0; t < f.size(); ++t) {
        for (std::size_t d = 0; d < f[t].size(); ++d) train_steps[q][t][d] += f[t][d];
      }
    }
    for (std::size_t q = 0; q < valid_x.size(); ++q) add_into(valid_f[q], rnn_first_step_scores(best, valid_x[q]));
  }
  return result;
}

Eigen::VectorXd urboost_infer(const NeuralEnsemble& ensemble, const Eigen::MatrixXd& x,
                              InferenceStats* stats) {
  if (ensemble.kind != LearnerKind::kRnn) {
    throw ValidationError("ensemble does not hold conditional scorers");
  }
  return ensemble.score(x, stats);
}

}  // namespace unirank
