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

#include "unirank/gbdt.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "gtest/gtest.h"
#include "oracle.hpp"
#include "synthetic.hpp"
#include "unirank/errors.hpp"

namespace unirank {
namespace {

std::vector<Rating> to_ratings(const std::vector<int>& r) { return {r.begin(), r.end()}; }

bool has_two_levels(const std::vector<int>& r) {
  return std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) != r.end();
}

TEST(DeltaZ, HandValue) {
  const std::vector<Rating> ratings{2, 0};
  const std::vector<double> scores{1.0, 0.0};
  const DeltaZContext ctx = make_delta_z_context(ratings, scores);
  EXPECT_NEAR(ctx.idcg, 3.0, 1e-15);
  // |(4 - 1)(1 - 1/log2 3)| / (1 * 3)
  EXPECT_NEAR(delta_z(0, 1, ctx), 0.369070246428542562900472885657, 1e-15);
}

TEST(DeltaZ, EqualRatingsViolateContract) {
  const std::vector<Rating> ratings{1, 1, 0};
  const DeltaZContext ctx = make_delta_z_context(ratings, std::vector<double>{0.1, 0.2, 0.3});
  EXPECT_THROW(delta_z(0, 1, ctx), ContractViolation);
}

TEST(DeltaZ, ShiftInvariantAndSymmetric) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const oracle::RandomQuery q = oracle::random_query(rng, 12, 4);
    if (!has_two_levels(q.ratings)) continue;
    std::vector<double> shifted = q.scores;
    for (double& s : shifted) s += 3.25;
    const auto r = to_ratings(q.ratings);
    const DeltaZContext a = make_delta_z_context(r, q.scores);
    const DeltaZContext b = make_delta_z_context(r, shifted);
    for (std::size_t i = 0; i < r.size(); ++i) {
      for (std::size_t j = 0; j < r.size(); ++j) {
        if (r[i] == r[j]) continue;
        EXPECT_NEAR(delta_z(i, j, a), delta_z(i, j, b), 1e-9 * delta_z(i, j, a));
        EXPECT_EQ(delta_z(i, j, a), delta_z(j, i, a));
      }
    }
  }
}

TEST(UmartGradients, WindowOneIsPairwiseLambda) {
  std::mt19937_64 rng(2);
  int checked = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const oracle::RandomQuery q = oracle::random_query(rng, 15, 4);
    if (!has_two_levels(q.ratings)) continue;
    for (bool symmetric : {false, true}) {
      LambdaOptions opt;
      opt.window = 1;
      opt.symmetric_hessian = symmetric;
      const LambdaPair got = umart_gradients(partition_unique_ratings(to_ratings(q.ratings)), q.scores, opt);
      const oracle::PairwiseLambdas want = oracle::pairwise_lambdas(q.ratings, q.scores, 2.0, symmetric);
      for (std::size_t d = 0; d < q.ratings.size(); ++d) {
        EXPECT_NEAR(got.grad[d], want.grad[d], 1e-9 * std::max(1.0, std::fabs(want.grad[d])));
        EXPECT_NEAR(got.hess[d], want.hess[d], 1e-9 * std::max(1.0, std::fabs(want.hess[d])));
      }
    }
    ++checked;
  }
  EXPECT_GT(checked, 400);
}

TEST(UmartGradients, WideWindowEqualsUnwindowed) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 300; ++trial) {
    const oracle::RandomQuery q = oracle::random_query(rng, 20, 4);
    const auto p = partition_unique_ratings(to_ratings(q.ratings));
    LambdaOptions wide;
    wide.window = q.ratings.size();
    const LambdaPair a = umart_gradients(p, q.scores, wide);
    const LambdaPair b = umart_gradients(p, q.scores, LambdaOptions{});
    for (std::size_t d = 0; d < q.ratings.size(); ++d) {
      EXPECT_NEAR(a.grad[d], b.grad[d], 1e-12 * std::max(1.0, std::fabs(b.grad[d])));
      EXPECT_NEAR(a.hess[d], b.hess[d], 1e-12 * std::max(1.0, std::fabs(b.hess[d])));
    }
  }
}

TEST(UmartGradients, SingleRatingIsZero) {
  const auto p = partition_unique_ratings(std::vector<Rating>{2, 2, 2});
  const LambdaPair lp = umart_gradients(p, std::vector<double>{0.3, -1.0, 2.0}, LambdaOptions{});
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_EQ(lp.grad[d], 0.0);
    EXPECT_EQ(lp.hess[d], 0.0);
  }
}

TEST(UmartGradients, TopRatedPushedUp) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 500; ++trial) {
    const oracle::RandomQuery q = oracle::random_query(rng, 15, 4);
    if (!has_two_levels(q.ratings)) continue;
    const int top = *std::max_element(q.ratings.begin(), q.ratings.end());
    for (std::optional<std::size_t> window : {std::optional<std::size_t>{}, std::optional<std::size_t>{2}}) {
      LambdaOptions opt;
      opt.window = window;
      const LambdaPair lp = umart_gradients(partition_unique_ratings(to_ratings(q.ratings)), q.scores, opt);
      double sum = 0;
      for (std::size_t d = 0; d < q.ratings.size(); ++d) {
        if (q.ratings[d] == top) EXPECT_LT(lp.grad[d], 0.0);
        EXPECT_GE(lp.hess[d], 0.0);
        sum += lp.grad[d];
      }
      EXPECT_NEAR(sum, 0.0, 1e-9 * q.ratings.size() * 1e12);
    }
  }
}

Eigen::MatrixXd column(const std::vector<double>& v) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(v.size()), 1);
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i), 0) = v[i];
  return x;
}

TEST(BinMapper, FewDistinctValuesGetOwnBins) {
  const Eigen::MatrixXd x = column({3, 1, 2, 1, 3});
  const BinMapper bins(x, 255);
  EXPECT_EQ(bins.bin_count(0), 3u);
  EXPECT_EQ(bins.bin(0, 1.0), 0);
  EXPECT_EQ(bins.bin(0, 2.0), 1);
  EXPECT_EQ(bins.bin(0, 3.0), 2);
  EXPECT_EQ(bins.bin(0, 1.5), 1);
  EXPECT_EQ(bins.bin(0, 100.0), 2);
}

TEST(BinMapper, EqualFrequencyWhenManyValues) {
  std::vector<double> v;
  for (int i = 0; i < 1000; ++i) v.push_back(i);
  const BinMapper bins(column(v), 10);
  EXPECT_EQ(bins.bin_count(0), 10u);
  std::vector<int> counts(10, 0);
  for (double value : v) ++counts[bins.bin(0, value)];
  for (int c : counts) EXPECT_EQ(c, 100);
}

TreeConfig small_tree() {
  TreeConfig c;
  c.min_data_in_leaf = 1;
  c.max_leaves = 8;
  return c;
}

TEST(FitTree, ZeroGradientsGiveZeroLeaf) {
  const Eigen::MatrixXd x = column({0, 1, 2, 3});
  const std::vector<double> g(4, 0.0), h(4, 1.0);
  const RegressionTree t = fit_tree(x, BinMapper(x, 255), g, h, small_tree());
  ASSERT_EQ(t.leaf_count(), 1u);
  EXPECT_EQ(t.leaf_values[0], 0.0);
}

TEST(FitTree, ConstantFeaturesGiveSingleLeaf) {
  const Eigen::MatrixXd x = Eigen::MatrixXd::Constant(6, 2, 0.5);
  const std::vector<double> g{1, -1, 2, -2, 3, -3}, h(6, 1.0);
  const RegressionTree t = fit_tree(x, BinMapper(x, 255), g, h, small_tree());
  EXPECT_EQ(t.leaf_count(), 1u);
}

TEST(FitTree, SplitsOnSeparatingFeature) {
  Eigen::MatrixXd x(8, 2);
  x << 0.9, 0.1, 0.8, 0.9, 0.7, 0.3, 0.95, 0.6,
       0.1, 0.2, 0.2, 0.8, 0.15, 0.5, 0.05, 0.7;
  const std::vector<double> g{-1, -1, -1, -1, 1, 1, 1, 1}, h(8, 1.0);
  TreeConfig c = small_tree();
  c.max_leaves = 2;
  const RegressionTree t = fit_tree(x, BinMapper(x, 255), g, h, c);
  ASSERT_EQ(t.nodes.size(), 1u);
  EXPECT_EQ(t.nodes[0].feature, 0u);
  for (Eigen::Index i = 0; i < 4; ++i) EXPECT_GT(t.predict(x, i), 0.0);
  for (Eigen::Index i = 4; i < 8; ++i) EXPECT_LT(t.predict(x, i), 0.0);
  EXPECT_NEAR(t.predict(x, 0), 4.0 / (4.0 + 1e-3), 1e-12);
}

TEST(FitTree, HugeLambdaShrinksLeavesToZero) {
  Eigen::MatrixXd x = column({0, 1, 2, 3, 4, 5});
  const std::vector<double> g{-3, -2, -1, 1, 2, 3}, h(6, 1.0);
  TreeConfig c = small_tree();
  c.lambda = 1e12;
  const RegressionTree t = fit_tree(x, BinMapper(x, 255), g, h, c);
  for (double v : t.leaf_values) EXPECT_LT(std::fabs(v), 1e-10);
}

TEST(FitTree, RespectsLeafLimitsAndRoutesEveryRow) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(300, 4);
  std::vector<double> g(300), h(300);
  for (Eigen::Index i = 0; i < 300; ++i) {
    for (Eigen::Index j = 0; j < 4; ++j) x(i, j) = n(rng);
    g[static_cast<std::size_t>(i)] = n(rng) + x(i, 1);
    h[static_cast<std::size_t>(i)] = std::fabs(n(rng)) + 0.1;
  }
  TreeConfig c;
  c.max_leaves = 7;
  c.min_data_in_leaf = 20;
  const RegressionTree t = fit_tree(x, BinMapper(x, 16), g, h, c);
  EXPECT_LE(t.leaf_count(), 7u);
  EXPECT_EQ(t.nodes.size() + 1, t.leaf_count());
  std::vector<std::size_t> per_leaf(t.leaf_count(), 0);
  for (Eigen::Index i = 0; i < 300; ++i) ++per_leaf[t.leaf_index(x.data() + i, x.rows())];
  for (std::size_t count : per_leaf) EXPECT_GE(count, 20u);
}

TEST(TreeEnsemble, TextRoundTrip) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n;
  Eigen::MatrixXd x(200, 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = n(rng) / 3.0;
  const BinMapper bins(x, 32);
  TreeEnsembleModel model;
  model.feature_count = 3;
  model.shrinkage = 0.1;
  for (int t = 0; t < 5; ++t) {
    std::vector<double> g(200), h(200);
    for (std::size_t i = 0; i < 200; ++i) {
      g[i] = n(rng) + x(static_cast<Eigen::Index>(i), t % 3);
      h[i] = 1.0;
    }
    model.trees.push_back(fit_tree(x, bins, g, h, TreeConfig{}));
  }
  std::stringstream ss;
  write_tree_ensemble(ss, model);
  const TreeEnsembleModel back = read_tree_ensemble(ss);
  ASSERT_EQ(back.trees.size(), 5u);
  EXPECT_EQ(back.predict(x), model.predict(x));
}

TEST(TreeEnsemble, RejectsMalformedText) {
  std::stringstream bad("trees 1 shrinkage 0.05 features 2\ntree 1 2\n0 0.5 -1 5\n1 2\n");
  EXPECT_THROW(read_tree_ensemble(bad), ValidationError);
  std::stringstream truncated("trees 2 shrinkage 0.05 features 2\ntree 0 1\n0.5\n");
  EXPECT_THROW(read_tree_ensemble(truncated), ValidationError);
}

TEST(TreeEnsemble, FeatureMismatchThrows) {
  TreeEnsembleModel m;
  m.feature_count = 3;
  EXPECT_THROW(m.predict(Eigen::MatrixXd::Zero(2, 4)), ValidationError);
}

TEST(UmartTrain, ZeroRoundsGiveZeroModel) {
  const Dataset train = testing::separable_dataset({20, 10, 3, 4, 1});
  GbdtConfig c;
  c.num_trees = 0;
  const UmartResult r = umart_train(train, train, c);
  EXPECT_TRUE(r.model.trees.empty());
  EXPECT_TRUE(r.model.predict(train.queries()[0].feature_matrix()).isZero(0.0));
}

TEST(UmartTrain, DeterministicAndReachesPerfectRanking) {
  const Dataset train = testing::separable_dataset({40, 12, 3, 4, 1});
  const Dataset valid = testing::separable_dataset({15, 12, 3, 4, 2});
  GbdtConfig c;
  c.num_trees = 20;
  c.lambda.window = 2;
  c.tree.min_data_in_leaf = 5;
  const UmartResult a = umart_train(train, valid, c);
  const UmartResult b = umart_train(train, valid, c);
  EXPECT_EQ(a.log.to_text(), b.log.to_text());
  EXPECT_EQ(a.best_key.ndcg, (std::vector<double>{1.0, 1.0, 1.0, 1.0}));
  EXPECT_GT(a.best_key.ndcg[0], a.log.records.front().key.ndcg[0]);
}

TEST(UmartTrain, RejectsZeroWindow) {
  const Dataset train = testing::separable_dataset({5, 5, 1, 2, 1});
  GbdtConfig c;
  c.lambda.window = 0;
  EXPECT_THROW(umart_train(train, train, c), ValidationError);
}

}  // namespace
}  // namespace unirank
