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

#include "unirank/unique_loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "gtest/gtest.h"
#include "oracle.hpp"
#include "unirank/errors.hpp"

namespace unirank {
namespace {

using Ratings = std::vector<Rating>;
using Scores = std::vector<double>;

const Ratings kExampleRatings{1, 2, 2, 0};
const Scores kExampleScores{std::log(2.0), std::log(3.0), std::log(4.0), std::log(5.0)};
// -(1/2){3(ln(3/10) + ln(4/11)) + ln(2/7)}
const double kExampleLoss =
    -0.5 * (3.0 * (std::log(3.0 / 10.0) + std::log(4.0 / 11.0)) + std::log(2.0 / 7.0));

double rel_diff(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-300});
}

TEST(Likelihood, EmptyPoolIsCertain) {
  EXPECT_EQ(std::exp(-neg_log_softmax_against(0.7, {})), 1.0);
}

TEST(Likelihood, SymmetricPair) {
  const auto p = partition_unique_ratings(Ratings{1, 0});
  EXPECT_DOUBLE_EQ(likelihood(p, Scores{0.3, 0.3}, 0, 0), 0.5);
}

TEST(Likelihood, WorkedExample) {
  const auto p = partition_unique_ratings(kExampleRatings);
  EXPECT_NEAR(likelihood(p, kExampleScores, 0, 1), 3.0 / 10.0, 1e-15);
  EXPECT_NEAR(likelihood(p, kExampleScores, 0, 2), 4.0 / 11.0, 1e-15);
  EXPECT_NEAR(likelihood(p, kExampleScores, 1, 0), 2.0 / 7.0, 1e-15);
}

TEST(Likelihood, ContractViolations) {
  const auto p = partition_unique_ratings(kExampleRatings);
  EXPECT_THROW(likelihood(p, kExampleScores, 2, 3), ContractViolation);  // t = |R|
  EXPECT_THROW(likelihood(p, kExampleScores, 0, 0), ContractViolation);  // doc not in c_t
  EXPECT_THROW(likelihood(p, Scores{0.0}, 0, 1), ValidationError);
}

TEST(LikelihoodWindowed, WideWindowReducesToPlainSoftmax) {
  const auto p = partition_unique_ratings(kExampleRatings);
  for (std::size_t u : {2u, 3u, 100u}) {
    EXPECT_EQ(likelihood_windowed(p, kExampleScores, 0, 1, u),
              likelihood(p, kExampleScores, 0, 1));
  }
}

TEST(LikelihoodWindowed, UnitWindowWorkedExample) {
  // Pool sorted descending: {ln 5}, {ln 2} -> (3/8)(3/5).
  const auto p = partition_unique_ratings(kExampleRatings);
  EXPECT_NEAR(likelihood_windowed(p, kExampleScores, 0, 1, 1), 0.225, 1e-15);
}

TEST(LikelihoodWindowed, UnitWindowOfTwoIsProductOfPairwiseTerms) {
  const auto p = partition_unique_ratings(Ratings{1, 0, 0});
  const Scores s{0.2, -0.4, 1.1};
  const double expected = 1.0 / (1.0 + std::exp(-0.4 - 0.2)) * 1.0 / (1.0 + std::exp(1.1 - 0.2));
  EXPECT_NEAR(likelihood_windowed(p, s, 0, 0, 1), expected, 1e-15);
}

TEST(ScoreWindows, RemainderGoesLastAndTiesKeepIndexOrder) {
  const Scores s{0.0, 1.0, 1.0, 3.0, -1.0};
  const std::vector<std::size_t> lower{0, 1, 2, 3, 4};
  const auto w = score_windows(lower, s, 2);
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[0], (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(w[1], (std::vector<std::size_t>{0, 2}));
  EXPECT_EQ(w[2], (std::vector<std::size_t>{4}));
  EXPECT_THROW(score_windows(lower, s, 0), ContractViolation);
}

TEST(Loss, WorkedExampleClosedForm) {
  const auto p = partition_unique_ratings(kExampleRatings);
  EXPECT_LT(rel_diff(loss(p, kExampleScores), kExampleLoss), 1e-12);
  // 30-digit evaluation of the same closed form.
  EXPECT_NEAR(loss(p, kExampleScores), 3.94974205825430787461939864021, 1e-12);
}

TEST(Loss, SingleRatingLevelIsZero) {
  const auto p = partition_unique_ratings(Ratings{2, 2, 2});
  EXPECT_EQ(loss(p, Scores{1.0, -3.0, 0.5}), 0.0);
  EXPECT_EQ(loss(p, Scores{1.0, -3.0, 0.5}, LossConfig{1}), 0.0);
}

TEST(LossVectorized, GuardedDivision) {
  EXPECT_EQ(loss_vectorized(Ratings{3, 3}, Scores{1.0, 2.0}), 0.0);
  EXPECT_EQ(loss_vectorized(Ratings{}, Scores{}), 0.0);
}

TEST(LossVectorized, MatchesWorkedExample) {
  EXPECT_LT(rel_diff(loss_vectorized(kExampleRatings, kExampleScores), kExampleLoss), 1e-12);
}

TEST(LossVectorized, EqualScoresPair) {
  EXPECT_NEAR(loss_vectorized(Ratings{1, 0}, Scores{0.0, 0.0}), std::log(2.0), 1e-15);
}

TEST(LossVectorized, LargeScoresStayFinite) {
  const Ratings r{2, 1, 0, 0};
  const Scores s{-900.0, 800.0, 1200.0, -5.0};
  const double v = loss_vectorized(r, s);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_LT(rel_diff(v, loss(partition_unique_ratings(r), s)), 1e-12);
  for (double g : residuals_vectorized(r, s)) EXPECT_TRUE(std::isfinite(g));
}

TEST(Residuals, EqualScoresPair) {
  const auto p = partition_unique_ratings(Ratings{1, 0});
  const auto g = residuals(p, Scores{0.0, 0.0});
  EXPECT_NEAR(g[0], 0.5, 1e-15);
  EXPECT_NEAR(g[1], -0.5, 1e-15);
  const auto gv = residuals_vectorized(Ratings{1, 0}, Scores{0.0, 0.0});
  EXPECT_NEAR(gv[0], 0.5, 1e-15);
  EXPECT_NEAR(gv[1], -0.5, 1e-15);
}

TEST(Residuals, BottomDocumentOnlyGetsPushedDown) {
  const auto g = residuals_vectorized(Ratings{1, 0}, Scores{0.4, -0.2});
  const double p_top = 1.0 / (1.0 + std::exp(-0.2 - 0.4));
  EXPECT_NEAR(g[1], -std::exp(-0.2) / (std::exp(-0.2) + std::exp(0.4)), 1e-15);
  EXPECT_NEAR(g[0], 1.0 - p_top, 1e-15);
}

TEST(Residuals, WorkedExampleMatchesFiniteDifferences) {
  const auto p = partition_unique_ratings(kExampleRatings);
  const auto fd = oracle::gradient(kExampleRatings, kExampleScores);
  const auto g = residuals(p, kExampleScores);
  const auto gv = residuals_vectorized(kExampleRatings, kExampleScores);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_NEAR(g[i], -fd[i], 1e-6);
    EXPECT_NEAR(gv[i], -fd[i], 1e-6);
  }
}

TEST(Oracle, ZeroGradientForSingleLevel) {
  for (double g : oracle::gradient(Ratings{1, 1, 1}, Scores{0.3, -2.0, 4.0})) EXPECT_EQ(g, 0.0);
}

class RandomQueries : public ::testing::Test {
 protected:
  std::mt19937_64 rng{7};
};

TEST_F(RandomQueries, VectorizedMatchesOracleLoss) {
  for (int trial = 0; trial < 1000; ++trial) {
    const auto q = oracle::random_query(rng, 50, 4);
    const double want = oracle::loss(q.ratings, q.scores);
    const double got = loss_vectorized(q.ratings, q.scores);
    if (want == 0.0) {
      EXPECT_EQ(got, 0.0);
    } else {
      EXPECT_LT(rel_diff(got, want), 1e-9) << "trial " << trial;
    }
    EXPECT_LT(rel_diff(loss(partition_unique_ratings(q.ratings), q.scores), want), 1e-9);
  }
}

void expect_gradient_close(const std::vector<double>& residual, const std::vector<double>& fd) {
  const double scale = std::max(1.0, std::sqrt(std::inner_product(
                                          fd.begin(), fd.end(), fd.begin(), 0.0)));
  for (std::size_t i = 0; i < fd.size(); ++i) {
    EXPECT_LE(std::fabs(residual[i] + fd[i]), 1e-4 * std::max(std::fabs(fd[i]), 1e-3 * scale))
        << "coordinate " << i;
  }
}

TEST_F(RandomQueries, ResidualsAreNegativeFiniteDifferences) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = oracle::random_query(rng, 30, 4);
    const auto fd = oracle::gradient(q.ratings, q.scores);
    expect_gradient_close(residuals(partition_unique_ratings(q.ratings), q.scores), fd);
    expect_gradient_close(residuals_vectorized(q.ratings, q.scores), fd);
  }
}

// Window membership is piecewise constant in the scores; keep every pair of
// scores further apart than the probe step so no probe crosses a boundary.
bool well_separated(std::vector<double> scores, double gap) {
  std::sort(scores.begin(), scores.end());
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] - scores[i - 1] < gap) return false;
  }
  return true;
}

TEST_F(RandomQueries, WindowedResidualsAreNegativeFiniteDifferences) {
  for (int trial = 0; trial < 200; ++trial) {
    auto q = oracle::random_query(rng, 30, 4);
    if (!well_separated(q.scores, 1e-3)) continue;
    for (std::size_t u : {1u, 2u, 5u}) {
      const auto fd = oracle::gradient(q.ratings, q.scores, u);
      expect_gradient_close(residuals(partition_unique_ratings(q.ratings), q.scores, {u}), fd);
      EXPECT_LT(rel_diff(loss(partition_unique_ratings(q.ratings), q.scores, {u}),
                         oracle::loss(q.ratings, q.scores, u)),
                1e-9);
    }
  }
}

TEST_F(RandomQueries, ResidualsBalance) {
  for (int trial = 0; trial < 500; ++trial) {
    const auto q = oracle::random_query(rng, 50, 4);
    const auto p = partition_unique_ratings(q.ratings);
    for (const auto& g : {residuals(p, q.scores), residuals_vectorized(q.ratings, q.scores),
                          residuals(p, q.scores, {2})}) {
      EXPECT_LT(std::fabs(std::accumulate(g.begin(), g.end(), 0.0)), 1e-9);
    }
  }
}

TEST_F(RandomQueries, NonNegativeAndShiftInvariant) {
  for (int trial = 0; trial < 500; ++trial) {
    const auto q = oracle::random_query(rng, 40, 4);
    const auto p = partition_unique_ratings(q.ratings);
    const double base = loss(p, q.scores);
    EXPECT_GE(base, 0.0);
    Scores shifted = q.scores;
    for (double& s : shifted) s += 3.75;
    EXPECT_NEAR(loss(p, shifted), base, 1e-9 * std::max(1.0, base));
    EXPECT_NEAR(loss_vectorized(q.ratings, shifted), base, 1e-9 * std::max(1.0, base));
  }
}

TEST_F(RandomQueries, TopAndBottomDocumentsHaveDescentDirections) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto q = oracle::random_query(rng, 20, 4);
    const auto p = partition_unique_ratings(q.ratings);
    if (p.levels() < 2) continue;
    const double base = loss(p, q.scores);
    for (std::size_t d : p.steps.front().selected) {
      Scores s = q.scores;
      s[d] += 0.05;
      EXPECT_LT(loss(p, s), base);
    }
    for (std::size_t d : p.steps.back().selected) {
      Scores s = q.scores;
      s[d] -= 0.05;
      EXPECT_LT(loss(p, s), base);
    }
  }
}

TEST_F(RandomQueries, WideWindowEqualsUnwindowed) {
  for (int trial = 0; trial < 300; ++trial) {
    const auto q = oracle::random_query(rng, 30, 4);
    const auto p = partition_unique_ratings(q.ratings);
    const std::size_t u = q.ratings.size();
    EXPECT_EQ(loss(p, q.scores, {u}), loss(p, q.scores));
    EXPECT_EQ(residuals(p, q.scores, {u}), residuals(p, q.scores));
  }
}

TEST_F(RandomQueries, NoTiesReducesToListMle) {
  for (int trial = 0; trial < 300; ++trial) {
    auto q = oracle::random_query(rng, 12, 4);
    // Distinct ratings: a random permutation of 0..n-1.
    std::iota(q.ratings.begin(), q.ratings.end(), 0);
    std::shuffle(q.ratings.begin(), q.ratings.end(), rng);
    const auto p = partition_unique_ratings(q.ratings);
    const auto steps = oracle::listmle_steps(q.ratings, q.scores);
    ASSERT_EQ(p.levels(), q.ratings.size());
    for (std::size_t t = 0; t + 1 < p.levels(); ++t) {
      ASSERT_EQ(p.steps[t].selected.front(), steps[t].doc);
      EXPECT_NEAR(likelihood(p, q.scores, t, steps[t].doc), steps[t].probability, 1e-12);
    }
  }
}

TEST_F(RandomQueries, StepResidualsSumToResiduals) {
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = oracle::random_query(rng, 30, 4);
    const auto p = partition_unique_ratings(q.ratings);
    std::vector<double> sum(q.scores.size(), 0.0);
    double total = 0.0;
    for (std::size_t t = 0; t < p.scoring_steps(); ++t) {
      const auto g = step_residuals(p, t, q.scores);
      for (std::size_t i = 0; i < g.size(); ++i) sum[i] += g[i];
      total += step_loss(p, t, q.scores);
    }
    const auto full = residuals(p, q.scores);
    for (std::size_t i = 0; i < full.size(); ++i) EXPECT_NEAR(sum[i], full[i], 1e-12);
    EXPECT_NEAR(total, loss(p, q.scores), 1e-12);
  }
}

}  // namespace
}  // namespace unirank
