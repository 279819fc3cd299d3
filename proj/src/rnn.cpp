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

#include "unirank/rnn.hpp"

#include <cmath>

#include "unirank/errors.hpp"
#include "unirank/mlp.hpp"

namespace unirank {

namespace {

Eigen::MatrixXd apply_elu(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return elu(v); });
}

Eigen::MatrixXd elu_grad(const Eigen::MatrixXd& z) {
  return z.unaryExpr([](double v) { return elu_derivative(v); });
}

void check_input(const RnnScorerParams& params, const Eigen::MatrixXd& x) {
  if (x.cols() != params.w1.rows()) {
    throw ValidationError("feature matrix has " + std::to_string(x.cols()) +
                          " columns, network expects " + std::to_string(params.w1.rows()));
  }
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& m, const std::vector<std::size_t>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), m.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace

RnnScorerParams init_rnn_scorer(std::size_t input_dim, std::size_t hidden1, std::size_t hidden2,
                                std::size_t state_dim, std::mt19937_64& rng) {
  if (input_dim == 0 || hidden1 == 0 || hidden2 == 0 || state_dim == 0) {
    throw ValidationError("network dimensions must be positive");
  }
  RnnScorerParams p;
  p.w1 = glorot_uniform(input_dim, hidden1, rng);
  p.w2 = glorot_uniform(hidden1, hidden2, rng);
  p.wx = glorot_uniform(hidden2, state_dim, rng);
  p.wh = glorot_uniform(state_dim, state_dim, rng);
  p.b = Eigen::MatrixXd::Zero(1, static_cast<Eigen::Index>(state_dim));
  p.w = glorot_uniform(state_dim + hidden2, 1, rng);
  return p;
}

std::vector<std::vector<double>> rnn_conditional_scores(const RnnScorerParams& params,
                                                        const UniqueRatingPartition& partition,
                                                        const Eigen::MatrixXd& x,
                                                        RnnCache* cache) {
  check_input(params, x);
  if (partition.document_count != static_cast<std::size_t>(x.rows())) {
    throw ValidationError("partition and feature matrix disagree on the document count");
  }
  RnnCache local;
  RnnCache& c = cache ? *cache : local;
  c.input = x;
  c.z1 = x * params.w1;
  c.a1 = apply_elu(c.z1);
  c.z2 = c.a1 * params.w2;
  c.embedding = apply_elu(c.z2);
  c.steps.clear();

  const Eigen::Index h = params.wh.rows();
  const Eigen::Index k2 = params.w2.cols();
  const auto w_state = params.w.topRows(h);
  const auto w_embed = params.w.bottomRows(k2);
  Eigen::RowVectorXd h_prev = Eigen::RowVectorXd::Zero(h);
  std::vector<std::vector<double>> scores;
  for (std::size_t t = 0; t < partition.scoring_steps(); ++t) {
    const PartitionStep& step = partition.steps[t];
    RnnStepCache s;
    s.rows = step.selected;
    s.rows.insert(s.rows.end(), step.lower.begin(), step.lower.end());
    s.selected = step.selected.size();
    s.h_prev = h_prev;
    const Eigen::MatrixXd e = gather_rows(c.embedding, s.rows);
    Eigen::MatrixXd pre = e * params.wx;
    pre.rowwise() += h_prev * params.wh + params.b;
    s.state = pre.array().tanh().matrix();
    const Eigen::VectorXd f = s.state * w_state + e * w_embed;

    std::vector<double> full(partition.document_count, 0.0);
    for (std::size_t i = 0; i < s.rows.size(); ++i) full[s.rows[i]] = f(static_cast<Eigen::Index>(i));
    scores.push_back(std::move(full));

    // Max-pool over c_t; strict comparison keeps the earliest row on ties,
    // and c_t rows are in ascending document order.
    s.argmax.assign(static_cast<std::size_t>(h), 0);
    for (Eigen::Index j = 0; j < h; ++j) {
      std::size_t best = 0;
      for (std::size_t i = 1; i < s.selected; ++i) {
        if (s.state(static_cast<Eigen::Index>(i), j) > s.state(static_cast<Eigen::Index>(best), j)) {
          best = i;
        }
      }
      s.argmax[static_cast<std::size_t>(j)] = best;
      h_prev(j) = s.state(static_cast<Eigen::Index>(best), j);
    }
    c.steps.push_back(std::move(s));
  }
  return scores;
}

RnnScorerParams rnn_backward(const RnnScorerParams& params, const RnnCache& cache,
                             const std::vector<std::vector<double>>& upstream) {
  if (upstream.size() != cache.steps.size()) {
    throw ValidationError("upstream gradient count does not match the unrolled steps");
  }
  const Eigen::Index h = params.wh.rows();
  const Eigen::Index k2 = params.w2.cols();
  const auto w_state = params.w.topRows(h);
  const auto w_embed = params.w.bottomRows(k2);

  RnnScorerParams g;
  g.wx = Eigen::MatrixXd::Zero(params.wx.rows(), params.wx.cols());
  g.wh = Eigen::MatrixXd::Zero(h, h);
  g.b = Eigen::MatrixXd::Zero(1, h);
  g.w = Eigen::MatrixXd::Zero(params.w.rows(), 1);
  Eigen::MatrixXd grad_embedding = Eigen::MatrixXd::Zero(cache.embedding.rows(), k2);

  // Gradient reaching h_t from step t + 1.
  Eigen::RowVectorXd grad_h = Eigen::RowVectorXd::Zero(h);
  for (std::size_t t = cache.steps.size(); t-- > 0;) {
    const RnnStepCache& s = cache.steps[t];
    const std::vector<double>& up = upstream[t];
    if (up.size() != static_cast<std::size_t>(cache.embedding.rows())) {
      throw ValidationError("upstream gradient length does not match the document count");
    }
    const auto m = static_cast<Eigen::Index>(s.rows.size());
    Eigen::VectorXd g_f(m);
    for (Eigen::Index i = 0; i < m; ++i) g_f(i) = up[s.rows[static_cast<std::size_t>(i)]];
    const Eigen::MatrixXd e = gather_rows(cache.embedding, s.rows);

    g.w.topRows(h) += s.state.transpose() * g_f;
    g.w.bottomRows(k2) += e.transpose() * g_f;

    Eigen::MatrixXd g_state = g_f * w_state.transpose();
    for (Eigen::Index j = 0; j < h; ++j) {
      g_state(static_cast<Eigen::Index>(s.argmax[static_cast<std::size_t>(j)]), j) += grad_h(j);
    }
    const Eigen::MatrixXd g_pre =
        g_state.cwiseProduct((1.0 - s.state.array().square()).matrix());
    const Eigen::RowVectorXd g_pre_sum = g_pre.colwise().sum();
    g.wx += e.transpose() * g_pre;
    g.wh += s.h_prev.transpose() * g_pre_sum;
    g.b += g_pre_sum;
    grad_h = g_pre_sum * params.wh.transpose();

    const Eigen::MatrixXd g_e = g_f * w_embed.transpose() + g_pre * params.wx.transpose();
    for (Eigen::Index i = 0; i < m; ++i) {
      grad_embedding.row(static_cast<Eigen::Index>(s.rows[static_cast<std::size_t>(i)])) += g_e.row(i);
    }
  }

  const Eigen::MatrixXd g_z2 = grad_embedding.cwiseProduct(elu_grad(cache.z2));
  g.w2 = cache.a1.transpose() * g_z2;
  const Eigen::MatrixXd g_z1 = (g_z2 * params.w2.transpose()).cwiseProduct(elu_grad(cache.z1));
  g.w1 = cache.input.transpose() * g_z1;
  return g;
}

Eigen::VectorXd rnn_first_step_scores(const RnnScorerParams& params, const Eigen::MatrixXd& x,
                                      InferenceStats* stats) {
  check_input(params, x);
  const Eigen::MatrixXd e = apply_elu(apply_elu(x * params.w1) * params.w2);
  Eigen::MatrixXd pre = e * params.wx;
  pre.rowwise() += params.b.row(0);
  const Eigen::MatrixXd state = pre.array().tanh().matrix();
  if (stats) stats->cell_applications += static_cast<std::size_t>(x.rows());
  const Eigen::Index h = params.wh.rows();
  return state * params.w.topRows(h) + e * params.w.bottomRows(params.w2.cols());
}

}  // namespace unirank
