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

// Bias-free three-layer scorer f = elu(elu(elu(X W1) W2) W3) with manual
// backpropagation, Adam and global-norm clipping, plus the uRank training
// loop (one query per batch, lexicographic NDCG checkpoint selection).

#ifndef UNIRANK_MLP_HPP_
#define UNIRANK_MLP_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unirank/data.hpp"
#include "unirank/training.hpp"

namespace unirank {

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }
inline double elu_derivative(double z) { return z > 0.0 ? 1.0 : std::exp(z); }

struct MlpParams {
  Eigen::MatrixXd w1;  // l x k1
  Eigen::MatrixXd w2;  // k1 x k2
  Eigen::MatrixXd w3;  // k2 x 1
  // ELU on the scalar output as well; off gives a linear last layer.
  bool final_activation = true;

  std::size_t input_dim() const { return static_cast<std::size_t>(w1.rows()); }
  TensorRefs tensors() { return {&w1, &w2, &w3}; }
  ConstTensorRefs tensors() const { return {&w1, &w2, &w3}; }
};

// Glorot-uniform weights.
MlpParams init_mlp(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                   bool final_activation, std::mt19937_64& rng);

struct MlpCache {
  Eigen::MatrixXd input;
  Eigen::MatrixXd z1, a1, z2, a2;
  Eigen::VectorXd z3;
};

// Scores for the n rows of `x`. Fills `cache` for a later backward pass.
Eigen::VectorXd mlp_forward(const MlpParams& params, const Eigen::MatrixXd& x,
                            MlpCache* cache = nullptr);

// Output of the second layer, elu(elu(X W1) W2).
Eigen::MatrixXd mlp_embedding(const MlpParams& params, const Eigen::MatrixXd& x,
                              MlpCache* cache = nullptr);

// Gradients of upstream . f with respect to W1, W2, W3.
MlpParams mlp_backward(const MlpParams& params, const MlpCache& cache,
                       const Eigen::VectorXd& upstream);
MlpParams mlp_backward(const MlpParams& params, const Eigen::MatrixXd& x,
                       const Eigen::VectorXd& upstream);

// Backward through the first two layers only, given d/d(embedding).
void mlp_embedding_backward(const MlpParams& params, const MlpCache& cache,
                            const Eigen::MatrixXd& grad_embedding, Eigen::MatrixXd& grad_w1,
                            Eigen::MatrixXd& grad_w2);

struct UrankResult {
  MlpParams params;
  SelectionKey best_key;
  std::size_t epochs_run = 0;
  TrainingLog log;
};

// Trains on `train` with the unique-rating loss, keeps the weights with the
// best validation key and stops after `patience` epochs without improvement.
UrankResult train_urank(const Dataset& train, const Dataset& valid, const NeuralConfig& config);

}  // namespace unirank

#endif  // UNIRANK_MLP_HPP_
