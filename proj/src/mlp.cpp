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

#include "unirank/mlp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unirank/errors.hpp"
#include "unirank/unique_loss.hpp"

namespace unirank {

namespace {

Eigen::MatrixXd apply_elu(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return elu(v); });
}

Eigen::MatrixXd elu_grad(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return elu_derivative(v); });
}

}  // namespace

MlpParams init_mlp(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                   bool final_activation, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden1 == 0 || hidden2 == 0) {
    throw ValidationError("network dimensions must be positive");
  }
  MlpParams p;
  p.w1 = glorot_uniform(input_dim, hidden1, rng);
  p.w2 = glorot_uniform(hidden1, hidden2, rng);
  p.w3 = glorot_uniform(hidden2, 1, rng);
  p.final_activation = final_activation;
  return p;
}

Eigen::MatrixXd mlp_embedding(const MlpParams& params, const Eigen::MatrixXd& x,
                              MlpCache* cache) {
  if (x.cols() != params.w1.rows()) {
    throw ValidationError("feature matrix has " + std::to_string(x.cols()) +
                          " columns, network expects " + std::to_string(params.w1.rows()));
  }
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  c.input = x;
  c.z1 = x * params.w1;
  c.a1 = apply_elu(c.z1);
  c.z2 = c.a1 * params.w2;
  c.a2 = apply_elu(c.z2);
  return c.a2;
}

Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x,
                            MlpCache* cache) {
  MlpCache local;
  MlpCache& c = cache ? *cache : local;
  mlp_embedding(params, x, &c);
  c.z3 = c.a2 * params.w3;
  if (!params.final_activation) return c.z3;
  return c.z3.unaryExpr([](double v) { return elu(v); });
}

void mlp_embedding_backward(const MlpParams& params, const MlpCache& cache,
                            const Eigen::MatrixXd& grad_embedding, Eigen::MatrixXd& grad_w1,
                            Eigen::MatrixXd& grad_w2) {
  const Eigen::MatrixXd g_z2 = grad_embedding.cwiseProduct(elu_grad(cache.z2));
  grad_w2 = cache.a1.transpose() * g_z2;
  const Eigen::MatrixXd g_z1 = (g_z2 * params.w2.transpose()).cwiseProduct(elu_grad(cache.z1));
  grad_w1 = cache.input.transpose() * g_z1;
}

MlpParams mlp_backward(const MlpParams& params, const MlpCache& cache,
                       const Eigen::VectorXd& upstream) {
  if (upstream.size() != cache.z3.size()) {
    throw ValidationError("upstream gradient length does not match the forward pass");
  }
  Eigen::VectorXd g_z3 = upstream;
  if (params.final_activation) g_z3 = upstream.cwiseProduct(elu_grad(cache.z3));
  MlpParams grads;
  grads.final_activation = params.final_activation;
  grads.w3 = cache.a2.transpose() * g_z3;
  const Eigen::MatrixXd g_a2 = g_z3 * params.w3.transpose();
  mlp_embedding_backward(params, cache, g_a2, grads.w1, grads.w2);
  return grads;
}

MlpParams mlp_backward(const MlpParams& params, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& upstream) {
  MlpCache cache;
  mlp_forward(params, x, &cache);
  return mlp_backward(params, cache, upstream);
}

namespace {

std::vector<std::vector<double>> score_all(const MlpParams& params,
                                           const std::vector<Eigen::MatrixXd>& features) {
  std::vector<std::vector<double>> out;
  out.reserve(features.size());
  for (const Eigen::MatrixXd& x : features) {
    const Eigen::VectorXd f = mlp_forward(params, x);
    out.emplace_back(f.data(), f.data() + f.size());
  }
  return out;
}

}  // namespace

UrankResult train_urank(const Dataset& train, const Dataset& valid, const NeuralConfig& config) {
  const std::vector<PreparedQuery> queries = prepare_training_queries(train);
  if (valid.empty()) throw ValidationError("validation set is empty");
  const std::vector<Eigen::MatrixXd> valid_x = feature_matrices(valid);

  std::mt19937_64 rng(config.seed);
  MlpParams params = init_mlp(train.feature_count(), config.hidden1, config.hidden2,
                              config.final_activation, rng);
  AdamState adam = make_adam_state(std::as_const(params).tensors());

  UrankResult result;
  result.params = params;
  std::vector<std::size_t> order(queries.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto run_epoch = [&](std::size_t) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    MlpCache cache;
    for (std::size_t qi : order) {
      const PreparedQuery& q = queries[qi];
      const Eigen::VectorXd f = mlp_forward(params, q.features, &cache);
      const std::span<const double> scores(f.data(), static_cast<std::size_t>(f.size()));
      total += loss_vectorized(q.ratings, scores);
      const std::vector<double> res = residuals_vectorized(q.ratings, scores);
      const Eigen::VectorXd upstream =
          -Eigen::Map<const Eigen::VectorXd>(res.data(), static_cast<Eigen::Index>(res.size()));
      MlpParams grads = mlp_backward(params, cache, upstream);
      clip_global_norm(grads.tensors(), config.grad_clip_norm);
      adam_step(params.tensors(), std::as_const(grads).tensors(), adam, config.learning_rate);
    }
    return total / static_cast<double>(queries.size());
  };
  auto validate = [&] { return selection_key(valid, score_all(params, valid_x), config.cutoffs); };
  auto snapshot = [&] { result.params = params; };

  const EpochLoopResult loop = run_epoch_loop(config, 1, run_epoch, validate, snapshot, result.log);
  result.best_key = loop.best_key;
  result.epochs_run = loop.epochs_run;
  return result;
}

}  // namespace unirank
