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

#include "unirank/data.hpp"

#include <random>

#include "gtest/gtest.h"
#include "unirank/errors.hpp"

namespace unirank {
namespace {

using Indices = std::vector<std::size_t>;

TEST(ParseLetor, SparseLineFillsMissingFeatures) {
  const Dataset ds = parse_letor("2 qid:7 1:0.5 3:1.0\n");
  ASSERT_EQ(ds.queries().size(), 1u);
  EXPECT_EQ(ds.feature_count(), 3u);
  const Document& doc = ds.queries()[0].documents()[0];
  EXPECT_EQ(doc.query_id, "7");
  EXPECT_EQ(doc.rating, 2);
  EXPECT_EQ(doc.features, (std::vector<double>{0.5, 0.0, 1.0}));
}

TEST(ParseLetor, EmptyInput) {
  EXPECT_TRUE(parse_letor("").empty());
  EXPECT_TRUE(parse_letor("\n  \n# only a comment\n").empty());
}

TEST(ParseLetor, GroupsByQueryInFirstAppearanceOrder) {
  const char* text =
      "0 qid:7 1:1 # doc a\n"
      "1 qid:9 1:2\n"
      "2 qid:7 1:3\n"
      "0 qid:9 1:4\n"
      "1 qid:9 2:5\n";
  const Dataset ds = parse_letor(text);
  ASSERT_EQ(ds.queries().size(), 2u);
  EXPECT_EQ(ds.queries()[0].query_id(), "7");
  EXPECT_EQ(ds.queries()[0].size(), 2u);
  EXPECT_EQ(ds.queries()[1].query_id(), "9");
  EXPECT_EQ(ds.queries()[1].size(), 3u);
  // File order kept inside a query.
  EXPECT_EQ(ds.queries()[1].ratings(), (std::vector<Rating>{1, 0, 1}));
  EXPECT_EQ(ds.queries()[1].documents()[2].features, (std::vector<double>{0.0, 5.0}));
  EXPECT_EQ(ds.queries()[0].unique_ratings(), (std::vector<Rating>{2, 0}));
}

TEST(ParseLetor, MalformedLineReportsLineNumber) {
  try {
    parse_letor("1 qid:1 1:0.5\n1 qid:1 x:0.5\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse_letor("1 1:0.5\n"), ParseError);
  EXPECT_THROW(parse_letor("1 qid:1 0:0.5\n"), ParseError);
  EXPECT_THROW(parse_letor("1 qid:1 1:abc\n"), ParseError);
  EXPECT_THROW(parse_letor("1 qid:1 1:1 1:2\n"), ParseError);
  EXPECT_THROW(parse_letor("high qid:1 1:1\n"), ParseError);
}

TEST(ParseLetor, RejectsNegativeAndRealRatings) {
  EXPECT_THROW(parse_letor("-1 qid:1 1:0.5\n"), ValidationError);
  EXPECT_THROW(parse_letor("1.5 qid:1 1:0.5\n"), ValidationError);
}

TEST(ParseLetor, LoadMissingFileIsIoError) {
  EXPECT_THROW(load_letor("/nonexistent/unirank/train.txt"), IoError);
}

TEST(ParseLetor, SerializeRoundTripsRandomDatasets) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> grade(0, 4);
  std::uniform_int_distribution<int> count(1, 6);
  std::normal_distribution<double> value(0.0, 100.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t l = static_cast<std::size_t>(count(rng));
    std::vector<QueryGroup> queries;
    const int nq = count(rng);
    for (int q = 0; q < nq; ++q) {
      std::vector<Document> docs;
      const int n = count(rng);
      for (int i = 0; i < n; ++i) {
        Document d;
        d.query_id = "q" + std::to_string(q);
        d.rating = grade(rng);
        for (std::size_t j = 0; j < l; ++j) d.features.push_back(value(rng));
        docs.push_back(d);
      }
      queries.emplace_back("q" + std::to_string(q), std::move(docs));
    }
    const Dataset ds(std::move(queries), l);
    EXPECT_EQ(parse_letor(serialize_letor(ds)), ds);
  }
}

QueryGroup column_group(const std::vector<double>& column) {
  std::vector<Document> docs;
  for (double v : column) docs.push_back(Document{"q", 1, {v}});
  return QueryGroup("q", std::move(docs));
}

std::vector<double> first_column(const QueryGroup& g) {
  std::vector<double> out;
  for (const Document& d : g.documents()) out.push_back(d.features[0]);
  return out;
}

TEST(NormalizePerQuery, MapsColumnOntoUnitInterval) {
  EXPECT_EQ(first_column(normalize_per_query(column_group({2, 4, 6}))),
            (std::vector<double>{0.0, 0.5, 1.0}));
  EXPECT_EQ(first_column(normalize_per_query(column_group({-1, 0, 3}))),
            (std::vector<double>{0.0, 0.25, 1.0}));
}

TEST(NormalizePerQuery, ConstantColumnBecomesZero) {
  EXPECT_EQ(first_column(normalize_per_query(column_group({3, 3}))),
            (std::vector<double>{0.0, 0.0}));
}

TEST(NormalizePerQuery, IdempotentAndKeepsRatings) {
  std::vector<Document> docs{{"q", 2, {5.0, 1.0}}, {"q", 0, {-3.0, 1.0}}, {"q", 1, {0.5, 1.0}}};
  const QueryGroup once = normalize_per_query(QueryGroup("q", docs));
  EXPECT_EQ(normalize_per_query(once), once);
  EXPECT_EQ(once.ratings(), (std::vector<Rating>{2, 0, 1}));
}

TEST(PartitionUniqueRatings, WorkedExampleWithTies) {
  const auto p = partition_unique_ratings(std::vector<Rating>{1, 2, 2, 0});
  ASSERT_EQ(p.levels(), 3u);
  EXPECT_EQ(p.steps[0].rating, 2);
  EXPECT_EQ(p.steps[0].selected, (Indices{1, 2}));
  EXPECT_EQ(p.steps[0].lower, (Indices{0, 3}));
  EXPECT_EQ(p.steps[1].rating, 1);
  EXPECT_EQ(p.steps[1].selected, (Indices{0}));
  EXPECT_EQ(p.steps[1].lower, (Indices{3}));
  EXPECT_EQ(p.steps[2].selected, (Indices{3}));
  EXPECT_TRUE(p.steps[2].lower.empty());
  EXPECT_EQ(p.scoring_steps(), 2u);
}

TEST(PartitionUniqueRatings, SingleLevel) {
  const auto p = partition_unique_ratings(std::vector<Rating>{1, 1, 1});
  ASSERT_EQ(p.levels(), 1u);
  EXPECT_EQ(p.steps[0].selected, (Indices{0, 1, 2}));
  EXPECT_TRUE(p.steps[0].lower.empty());
  EXPECT_EQ(p.scoring_steps(), 0u);
}

TEST(PartitionUniqueRatings, NoTies) {
  const auto p = partition_unique_ratings(std::vector<Rating>{4, 3, 2, 1, 0});
  ASSERT_EQ(p.levels(), 5u);
  for (std::size_t t = 0; t < 5; ++t) {
    EXPECT_EQ(p.steps[t].selected, (Indices{t}));
    EXPECT_EQ(p.steps[t].lower.size(), 4 - t);
  }
}

TEST(PartitionUniqueRatings, IsASetPartitionWithNestedPools) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> grade(0, 4);
  std::uniform_int_distribution<int> size(1, 40);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<Rating> ratings(static_cast<std::size_t>(size(rng)));
    for (auto& r : ratings) r = grade(rng);
    const auto p = partition_unique_ratings(ratings);
    std::vector<int> seen(ratings.size(), 0);
    std::size_t covered = 0;
    for (std::size_t t = 0; t < p.levels(); ++t) {
      const auto& step = p.steps[t];
      if (t > 0) EXPECT_LT(step.rating, p.steps[t - 1].rating);
      for (std::size_t d : step.selected) {
        EXPECT_EQ(ratings[d], step.rating);
        ++seen[d];
      }
      for (std::size_t d : step.lower) EXPECT_LT(ratings[d], step.rating);
      covered += step.selected.size();
      // s_{t+1} = s~_t
      if (t + 1 < p.levels()) {
        Indices next = p.steps[t + 1].selected;
        next.insert(next.end(), p.steps[t + 1].lower.begin(), p.steps[t + 1].lower.end());
        std::sort(next.begin(), next.end());
        EXPECT_EQ(next, step.lower);
      }
    }
    EXPECT_EQ(covered, ratings.size());
    for (int c : seen) EXPECT_EQ(c, 1);
    EXPECT_EQ(p.steps[0].selected.size() + p.steps[0].lower.size(), ratings.size());
  }
}

TEST(Dataset, RejectsMismatchedFeatureCounts) {
  std::vector<QueryGroup> queries;
  queries.emplace_back("a", std::vector<Document>{{"a", 0, {1.0}}});
  EXPECT_THROW(Dataset(queries, 2), ValidationError);
  EXPECT_THROW(QueryGroup("e", {}), ValidationError);
}

}  // namespace
}  // namespace unirank
