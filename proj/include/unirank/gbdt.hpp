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

// uMart: gradient-boosted regression trees on the unique-rating loss with
// LambdaMART-style NDCG weighting.
//
// For a pair d above d' (r(d) > r(d')), with d' in the lower pool s~ of d
// (or in d's window of that pool),
//
//   q      = e^(sigma F(d')) / (e^(sigma F(d)) + k),  k = sum over the pool of e^(sigma F)
//   dZ     = |(2^r(d) - 2^r(d')) (disc(d) - disc(d'))| / (max(|F(d) - F(d')|, eps) IDCG)
//   grad_d  -= sigma dZ q       hess_d  += 2 sigma^2 dZ q
//   grad_d' += sigma dZ q       hess_d' += 2 sigma^2 dZ q (1 - q)
//
// disc uses the 1-based position of each document under the current scores.

#ifndef UNIRANK_GBDT_HPP_
#define UNIRANK_GBDT_HPP_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unirank/data.hpp"
#include "unirank/training.hpp"

namespace unirank {

struct DeltaZContext {
  std::vector<Rating> ratings;
  std::vector<double> scores;
  std::vector<double> discount;  // 1 / log2(1 + position)
  double idcg = 0.0;
  double epsilon = 1e-12;
};

DeltaZContext make_delta_z_context(std::span<const Rating> ratings, std::span<const double> scores,
                                   double epsilon = 1e-12);

// Throws ContractViolation when the two ratings are equal.
double delta_z(std::size_t d, std::size_t d_prime, const DeltaZContext& ctx);

struct LambdaOptions {
  std::optional<std::size_t> window;
  double sigma = 2.0;
  // Multiply the upper document's hessian term by (1 - q) as well.
  bool symmetric_hessian = false;
  double epsilon = 1e-12;
};

struct LambdaPair {
  std::vector<double> grad;
  std::vector<double> hess;
};

// Zero for queries with a single rating level or zero IDCG.
LambdaPair umart_gradients(const UniqueRatingPartition& partition, std::span<const double> scores,
                           const LambdaOptions& options);

// Equal-frequency bin boundaries per feature. Bin b holds values in
// (upper[b-1], upper[b]]; the last bound is +inf.
class BinMapper {
 public:
  BinMapper() = default;
  BinMapper(const Eigen::MatrixXd& x, std::size_t max_bins);

  std::size_t feature_count() const { return upper_.size(); }
  std::size_t bin_count(std::size_t feature) const { return upper_[feature].size(); }
  std::uint16_t bin(std::size_t feature, double value) const;
  double upper_bound(std::size_t feature, std::size_t bin) const { return upper_[feature][bin]; }

 private:
  std::vector<std::vector<double>> upper_;
};

struct TreeNode {
  std::uint32_t feature = 0;
  double threshold = 0.0;
  // Non-negative: node index. Negative: ~leaf index.
  std::int32_t left = -1;
  std::int32_t right = -1;
};

// x[feature] <= threshold goes left.
struct RegressionTree {
  std::vector<TreeNode> nodes;
  std::vector<double> leaf_values;

  std::size_t leaf_count() const { return leaf_values.size(); }
  std::size_t leaf_index(const double* row, Eigen::Index stride) const;
  double predict(const Eigen::MatrixXd& x, Eigen::Index row) const;
};

struct TreeConfig {
  std::size_t max_leaves = 31;
  std::size_t min_data_in_leaf = 20;
  double lambda = 1e-3;
  double hessian_floor = 1e-16;
};

RegressionTree fit_tree(const Eigen::MatrixXd& x, const BinMapper& bins,
                        std::span<const double> grad, std::span<const double> hess,
                        const TreeConfig& config);

struct TreeEnsembleModel {
  std::vector<RegressionTree> trees;
  double shrinkage = 0.05;
  std::size_t feature_count = 0;

  Eigen::VectorXd predict(const Eigen::MatrixXd& x) const;
};

void write_tree_ensemble(std::ostream& out, const TreeEnsembleModel& model);
TreeEnsembleModel read_tree_ensemble(std::istream& in);

struct GbdtConfig {
  std::size_t num_trees = 500;
  // Stop after this many rounds without a better validation key.
  std::size_t early_stopping_rounds = 100;
  double shrinkage = 0.05;
  std::size_t max_bins = 255;
  TreeConfig tree;
  LambdaOptions lambda;
  std::vector<std::size_t> cutoffs{1, 3, 5, 10};
  double selection_tolerance = 1e-6;
};

struct UmartResult {
  TreeEnsembleModel model;
  SelectionKey best_key;
  std::size_t rounds_run = 0;
  // Learner 1, epoch = boosting round; round 0 is the empty model.
  TrainingLog log;
};

UmartResult umart_train(const Dataset& train, const Dataset& valid, const GbdtConfig& config);

}  // namespace unirank

#endif  // UNIRANK_GBDT_HPP_
