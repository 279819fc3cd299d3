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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>

#include "unirank/errors.hpp"
#include "unirank/metrics.hpp"
#include "unirank/unique_loss.hpp"

namespace unirank {

DeltaZContext make_delta_z_context(std::span<const Rating> ratings, std::span<const double> scores,
                                   double epsilon) {
  if (ratings.size() != scores.size()) {
    throw ValidationError("ratings and scores differ in length");
  }
  DeltaZContext ctx;
  ctx.ratings.assign(ratings.begin(), ratings.end());
  ctx.scores.assign(scores.begin(), scores.end());
  ctx.epsilon = epsilon;
  ctx.discount.assign(ratings.size(), 0.0);
  const std::vector<std::size_t> order = rank_by_score(scores);
  for (std::size_t pos = 0; pos < order.size(); ++pos) {
    ctx.discount[order[pos]] = 1.0 / std::log2(static_cast<double>(pos) + 2.0);
  }
  std::vector<Rating> ideal(ratings.begin(), ratings.end());
  std::sort(ideal.begin(), ideal.end(), std::greater<>());
  ctx.idcg = dcg_at_k(ideal, std::max<std::size_t>(ideal.size(), 1));
  return ctx;
}

double delta_z(std::size_t d, std::size_t d_prime, const DeltaZContext& ctx) {
  if (ctx.ratings.at(d) == ctx.ratings.at(d_prime)) {
    throw ContractViolation("delta_z needs documents with different ratings");
  }
  const double gain = std::ldexp(1.0, ctx.ratings[d]) - std::ldexp(1.0, ctx.ratings[d_prime]);
  const double disc = ctx.discount[d] - ctx.discount[d_prime];
  const double gap = std::max(std::fabs(ctx.scores[d] - ctx.scores[d_prime]), ctx.epsilon);
  return std::fabs(gain * disc) / (gap * ctx.idcg);
}

LambdaPair umart_gradients(const UniqueRatingPartition& partition, std::span<const double> scores,
                           const LambdaOptions& options) {
  const std::size_t n = partition.document_count;
  if (scores.size() != n) throw ValidationError("scores do not match the partition");
  if (options.window && *options.window == 0) throw ValidationError("window size must be >= 1");
  LambdaPair out{std::vector<double>(n, 0.0), std::vector<double>(n, 0.0)};
  if (partition.scoring_steps() == 0) return out;

  std::vector<Rating> ratings(n, 0);
  for (const PartitionStep& step : partition.steps) {
    for (std::size_t d : step.selected) ratings[d] = step.rating;
  }
  const DeltaZContext ctx = make_delta_z_context(ratings, scores, options.epsilon);
  if (!(ctx.idcg > 0.0)) return out;

  const double sigma = options.sigma;
  for (std::size_t t = 0; t < partition.scoring_steps(); ++t) {
    const PartitionStep& step = partition.steps[t];
    std::vector<std::vector<std::size_t>> pools;
    if (options.window) {
      pools = score_windows(step.lower, scores, *options.window);
    } else {
      pools.push_back(step.lower);
    }
    for (const std::vector<std::size_t>& pool : pools) {
      for (std::size_t d : step.selected) {
        double shift = sigma * scores[d];
        for (std::size_t j : pool) shift = std::max(shift, sigma * scores[j]);
        double denom = std::exp(sigma * scores[d] - shift);
        for (std::size_t j : pool) denom += std::exp(sigma * scores[j] - shift);
        for (std::size_t j : pool) {
          const double q = std::exp(sigma * scores[j] - shift) / denom;
          const double dz = delta_z(d, j, ctx);
          const double g = sigma * dz * q;
          const double h = 2.0 * sigma * sigma * dz * q;
          out.grad[d] -= g;
          out.grad[j] += g;
          out.hess[d] += options.symmetric_hessian ? h * (1.0 - q) : h;
          out.hess[j] += h * (1.0 - q);
        }
      }
    }
  }
  return out;
}

BinMapper::BinMapper(const Eigen::MatrixXd& x, std::size_t max_bins) {
  if (max_bins < 2 || max_bins > std::numeric_limits<std::uint16_t>::max()) {
    throw ValidationError("bin count must be in [2, 65535]");
  }
  const double inf = std::numeric_limits<double>::infinity();
  upper_.resize(static_cast<std::size_t>(x.cols()));
  std::vector<double> values(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index f = 0; f < x.cols(); ++f) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) values[static_cast<std::size_t>(i)] = x(i, f);
    std::sort(values.begin(), values.end());
    std::vector<double>& upper = upper_[static_cast<std::size_t>(f)];
    const std::size_t distinct =
        static_cast<std::size_t>(std::unique(values.begin(), values.end()) - values.begin());
    if (distinct <= max_bins) {
      upper.assign(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(distinct));
    } else {
      // Re-sort the full column for frequency-based cut points.
      for (Eigen::Index i = 0; i < x.rows(); ++i) values[static_cast<std::size_t>(i)] = x(i, f);
      std::sort(values.begin(), values.end());
      const std::size_t n = values.size();
      for (std::size_t b = 1; b <= max_bins; ++b) {
        const double v = values[b * n / max_bins - 1];
        if (upper.empty() || v > upper.back()) upper.push_back(v);
      }
    }
    if (upper.empty()) upper.push_back(inf);
    upper.back() = inf;
  }
}

std::uint16_t BinMapper::bin(std::size_t feature, double value) const {
  const std::vector<double>& upper = upper_[feature];
  const auto it = std::lower_bound(upper.begin(), upper.end(), value);
  const std::size_t b = std::min(static_cast<std::size_t>(it - upper.begin()), upper.size() - 1);
  return static_cast<std::uint16_t>(b);
}

std::size_t RegressionTree::leaf_index(const double* row, Eigen::Index stride) const {
  if (nodes.empty()) return 0;
  std::int32_t at = 0;
  while (at >= 0) {
    const TreeNode& node = nodes[static_cast<std::size_t>(at)];
    at = row[static_cast<Eigen::Index>(node.feature) * stride] <= node.threshold ? node.left
                                                                                   : node.right;
  }
  return static_cast<std::size_t>(~at);
}

double RegressionTree::predict(const Eigen::MatrixXd& x, Eigen::Index row) const {
  return leaf_values[leaf_index(x.data() + row, x.rows())];
}

namespace {

struct BinStats {
  double grad = 0.0;
  double hess = 0.0;
  std::size_t count = 0;
};

struct Split {
  double gain = 0.0;
  std::size_t feature = 0;
  std::size_t bin = 0;
  bool valid = false;
};

struct GrowingLeaf {
  std::vector<std::size_t> rows;
  double grad = 0.0;
  double hess = 0.0;
  std::int32_t parent = -1;
  bool is_left = true;
  Split split;
};

double leaf_score(double g, double h, double lambda) { return g * g / (h + lambda); }

}  // namespace

RegressionTree fit_tree(const Eigen::MatrixXd& x, const BinMapper& bins,
                        std::span<const double> grad, std::span<const double> hess,
                        const TreeConfig& config) {
  const std::size_t n = static_cast<std::size_t>(x.rows());
  if (grad.size() != n || hess.size() != n) {
    throw ValidationError("gradients do not match the feature rows");
  }
  if (bins.feature_count() != static_cast<std::size_t>(x.cols())) {
    throw ValidationError("bin mapper was built for a different feature count");
  }
  if (config.max_leaves == 0) throw ValidationError("max_leaves must be at least 1");
  const std::size_t l = bins.feature_count();
  const double lambda = config.lambda;
  const std::size_t min_data = std::max<std::size_t>(config.min_data_in_leaf, 1);

  std::vector<std::uint16_t> binned(n * l);
  for (std::size_t f = 0; f < l; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      binned[f * n + i] = bins.bin(f, x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)));
    }
  }
  std::vector<double> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = std::max(hess[i], config.hessian_floor);

  auto find_split = [&](GrowingLeaf& leaf) {
    leaf.split = Split{};
    if (leaf.rows.size() < 2 * min_data) return;
    const double parent = leaf_score(leaf.grad, leaf.hess, lambda);
    std::vector<BinStats> hist;
    for (std::size_t f = 0; f < l; ++f) {
      const std::size_t nb = bins.bin_count(f);
      if (nb < 2) continue;
      hist.assign(nb, BinStats{});
      const std::uint16_t* col = binned.data() + f * n;
      for (std::size_t r : leaf.rows) {
        BinStats& s = hist[col[r]];
        s.grad += grad[r];
        s.hess += h[r];
        ++s.count;
      }
      BinStats left;
      for (std::size_t b = 0; b + 1 < nb; ++b) {
        left.grad += hist[b].grad;
        left.hess += hist[b].hess;
        left.count += hist[b].count;
        const std::size_t right_count = leaf.rows.size() - left.count;
        if (left.count < min_data) continue;
        if (right_count < min_data) break;
        const double gain = leaf_score(left.grad, left.hess, lambda) +
                            leaf_score(leaf.grad - left.grad, leaf.hess - left.hess, lambda) -
                            parent;
        if (gain > leaf.split.gain) leaf.split = Split{gain, f, b, true};
      }
    }
  };

  std::vector<GrowingLeaf> leaves(1);
  leaves[0].rows.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    leaves[0].rows[i] = i;
    leaves[0].grad += grad[i];
    leaves[0].hess += h[i];
  }
  find_split(leaves[0]);

  RegressionTree tree;
  while (leaves.size() < config.max_leaves) {
    std::size_t best = leaves.size();
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].split.valid) continue;
      if (best == leaves.size() || leaves[i].split.gain > leaves[best].split.gain) best = i;
    }
    if (best == leaves.size()) break;

    GrowingLeaf& leaf = leaves[best];
    const Split split = leaf.split;
    const std::uint16_t* col = binned.data() + split.feature * n;
    GrowingLeaf left, right;
    for (std::size_t r : leaf.rows) {
      GrowingLeaf& side = col[r] <= split.bin ? left : right;
      side.rows.push_back(r);
      side.grad += grad[r];
      side.hess += h[r];
    }
    const auto node_index = static_cast<std::int32_t>(tree.nodes.size());
    const auto right_leaf = static_cast<std::int32_t>(leaves.size());
    tree.nodes.push_back(TreeNode{static_cast<std::uint32_t>(split.feature),
                                  bins.upper_bound(split.feature, split.bin),
                                  ~static_cast<std::int32_t>(best), ~right_leaf});
    if (leaf.parent >= 0) {
      TreeNode& p = tree.nodes[static_cast<std::size_t>(leaf.parent)];
      (leaf.is_left ? p.left : p.right) = node_index;
    }
    left.parent = right.parent = node_index;
    left.is_left = true;
    right.is_left = false;
    find_split(left);
    find_split(right);
    leaves[best] = std::move(left);
    leaves.push_back(std::move(right));
  }

  for (const GrowingLeaf& leaf : leaves) {
    tree.leaf_values.push_back(-leaf.grad / (leaf.hess + lambda) + 0.0);
  }
  return tree;
}

Eigen::VectorXd TreeEnsembleModel::predict(const Eigen::MatrixXd& x) const {
  if (static_cast<std::size_t>(x.cols()) != feature_count) {
    throw ValidationError("feature matrix has " + std::to_string(x.cols()) +
                          " columns, model expects " + std::to_string(feature_count));
  }
  Eigen::VectorXd out = Eigen::VectorXd::Zero(x.rows());
  for (const RegressionTree& tree : trees) {
    for (Eigen::Index i = 0; i < x.rows(); ++i) out(i) += shrinkage * tree.predict(x, i);
  }
  return out;
}

namespace {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void expect_token(std::istream& in, const char* token) {
  std::string word;
  if (!(in >> word) || word != token) {
    throw ValidationError(std::string("malformed tree model: expected '") + token + "'");
  }
}

template <typename T>
T read_value(std::istream& in, const char* what) {
  T v{};
  if (!(in >> v)) throw ValidationError(std::string("malformed tree model: bad ") + what);
  return v;
}

}  // namespace

// Layout:
//   trees <T> shrinkage <s> features <l>
//   tree <nodes> <leaves>
//   <feature> <threshold> <left> <right>     one line per node
//   <leaf value> ...                         one line
void write_tree_ensemble(std::ostream& out, const TreeEnsembleModel& model) {
  out << "trees " << model.trees.size() << " shrinkage " << format_double(model.shrinkage)
      << " features " << model.feature_count << '\n';
  for (const RegressionTree& tree : model.trees) {
    out << "tree " << tree.nodes.size() << ' ' << tree.leaf_values.size() << '\n';
    for (const TreeNode& node : tree.nodes) {
      out << node.feature << ' ' << format_double(node.threshold) << ' ' << node.left << ' '
          << node.right << '\n';
    }
    for (std::size_t i = 0; i < tree.leaf_values.size(); ++i) {
      out << (i ? " " : "") << format_double(tree.leaf_values[i]);
    }
    out << '\n';
  }
}

TreeEnsembleModel read_tree_ensemble(std::istream& in) {
  TreeEnsembleModel model;
  expect_token(in, "trees");
  const auto count = read_value<std::size_t>(in, "tree count");
  expect_token(in, "shrinkage");
  model.shrinkage = read_value<double>(in, "shrinkage");
  expect_token(in, "features");
  model.feature_count = read_value<std::size_t>(in, "feature count");
  for (std::size_t t = 0; t < count; ++t) {
    expect_token(in, "tree");
    RegressionTree tree;
    const auto nodes = read_value<std::size_t>(in, "node count");
    const auto leaves = read_value<std::size_t>(in, "leaf count");
    if (leaves != nodes + 1) throw ValidationError("malformed tree model: leaf count");
    for (std::size_t i = 0; i < nodes; ++i) {
      TreeNode node;
      node.feature = read_value<std::uint32_t>(in, "feature");
      node.threshold = read_value<double>(in, "threshold");
      node.left = read_value<std::int32_t>(in, "child");
      node.right = read_value<std::int32_t>(in, "child");
      for (std::int32_t c : {node.left, node.right}) {
        const bool ok = c >= 0 ? static_cast<std::size_t>(c) < nodes && c > static_cast<std::int32_t>(i)
                               : static_cast<std::size_t>(~c) < leaves;
        if (!ok) throw ValidationError("malformed tree model: child index out of range");
      }
      if (node.feature >= model.feature_count) {
        throw ValidationError("malformed tree model: feature index out of range");
      }
      tree.nodes.push_back(node);
    }
    for (std::size_t i = 0; i < leaves; ++i) {
      const double v = read_value<double>(in, "leaf value");
      if (!std::isfinite(v)) throw ValidationError("malformed tree model: non-finite leaf");
      tree.leaf_values.push_back(v);
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

UmartResult umart_train(const Dataset& train, const Dataset& valid, const GbdtConfig& config) {
  const std::vector<PreparedQuery> queries = prepare_training_queries(train);
  if (valid.empty()) throw ValidationError("validation set is empty");
  if (config.lambda.window && *config.lambda.window == 0) {
    throw ValidationError("window size must be >= 1");
  }
  std::vector<std::size_t> offset{0};
  for (const PreparedQuery& q : queries) offset.push_back(offset.back() + q.ratings.size());
  const std::size_t n = offset.back();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(train.feature_count()));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    x.middleRows(static_cast<Eigen::Index>(offset[q]), queries[q].features.rows()) = queries[q].features;
  }
  const BinMapper bins(x, config.max_bins);
  const std::vector<Eigen::MatrixXd> valid_x = feature_matrices(valid);

  UmartResult result;
  result.model.shrinkage = config.shrinkage;
  result.model.feature_count = train.feature_count();
  std::vector<double> scores(n, 0.0);
  std::vector<std::vector<double>> valid_scores;
  for (const Eigen::MatrixXd& vx : valid_x) valid_scores.emplace_back(static_cast<std::size_t>(vx.rows()), 0.0);

  const LossConfig loss_config{config.lambda.window};
  auto train_loss = [&] {
    double total = 0.0;
    for (std::size_t q = 0; q < queries.size(); ++q) {
      total += loss(queries[q].partition,
                    std::span<const double>(scores).subspan(offset[q], queries[q].ratings.size()),
                    loss_config);
    }
    return total / static_cast<double>(queries.size());
  };

  result.best_key = selection_key(valid, valid_scores, config.cutoffs);
  result.log.records.push_back(LogRecord{1, 0, train_loss(), result.best_key});
  std::size_t best_count = 0;
  std::size_t since_best = 0;
  std::vector<double> grad(n), hess(n);
  for (std::size_t round = 1; round <= config.num_trees; ++round) {
    for (std::size_t q = 0; q < queries.size(); ++q) {
      const std::size_t m = queries[q].ratings.size();
      const LambdaPair lp = umart_gradients(
          queries[q].partition, std::span<const double>(scores).subspan(offset[q], m), config.lambda);
      std::copy(lp.grad.begin(), lp.grad.end(), grad.begin() + static_cast<std::ptrdiff_t>(offset[q]));
      std::copy(lp.hess.begin(), lp.hess.end(), hess.begin() + static_cast<std::ptrdiff_t>(offset[q]));
    }
    RegressionTree tree = fit_tree(x, bins, grad, hess, config.tree);
    for (std::size_t i = 0; i < n; ++i) {
      scores[i] += config.shrinkage * tree.predict(x, static_cast<Eigen::Index>(i));
    }
    for (std::size_t q = 0; q < valid_x.size(); ++q) {
      for (Eigen::Index i = 0; i < valid_x[q].rows(); ++i) {
        valid_scores[q][static_cast<std::size_t>(i)] += config.shrinkage * tree.predict(valid_x[q], i);
      }
    }
    result.model.trees.push_back(std::move(tree));
    result.rounds_run = round;

    SelectionKey key = selection_key(valid, valid_scores, config.cutoffs);
    result.log.records.push_back(LogRecord{1, round, train_loss(), key});
    if (key_improves(key, result.best_key, config.selection_tolerance)) {
      result.best_key = std::move(key);
      best_count = result.model.trees.size();
      since_best = 0;
    } else if (++since_best >= config.early_stopping_rounds) {
      break;
    }
  }
  result.model.trees.resize(best_count);
  return result;
}

}  // namespace unirank
