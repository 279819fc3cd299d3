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

// Ranking datasets: LETOR/SVMLight ingestion, per-query grouping,
// per-query min-max normalization and unique-rating partitions.

#ifndef UNIRANK_DATA_HPP_
#define UNIRANK_DATA_HPP_

#include <cstddef>
#include <istream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace unirank {

using Rating = int;

struct Document {
  std::string query_id;
  Rating rating = 0;
  std::vector<double> features;

  bool operator==(const Document&) const = default;
};

// All documents of one query, in file order. Every index set used by the
// loss and the partitions refers to positions in `documents`.
class QueryGroup {
 public:
  QueryGroup() = default;
  QueryGroup(std::string query_id, std::vector<Document> documents);

  const std::string& query_id() const { return query_id_; }
  const std::vector<Document>& documents() const { return documents_; }
  std::size_t size() const { return documents_.size(); }
  std::size_t feature_count() const;

  // Distinct ratings, strictly decreasing.
  const std::vector<Rating>& unique_ratings() const { return unique_ratings_; }
  std::vector<Rating> ratings() const;
  Rating max_rating() const { return unique_ratings_.front(); }

  // n x l, one row per document.
  Eigen::MatrixXd feature_matrix() const;

  bool operator==(const QueryGroup&) const = default;

 private:
  std::string query_id_;
  std::vector<Document> documents_;
  std::vector<Rating> unique_ratings_;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<QueryGroup> queries, std::size_t feature_count);

  const std::vector<QueryGroup>& queries() const { return queries_; }
  std::size_t feature_count() const { return feature_count_; }
  std::size_t document_count() const;
  Rating max_rating() const;
  bool empty() const { return queries_.empty(); }

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<QueryGroup> queries_;
  std::size_t feature_count_ = 0;
};

// One selection step t: documents rated exactly r_t (`selected`) and the
// strictly lower-rated remainder (`lower`). s_t is their union.
struct PartitionStep {
  Rating rating = 0;
  std::vector<std::size_t> selected;
  std::vector<std::size_t> lower;
};

struct UniqueRatingPartition {
  std::vector<PartitionStep> steps;
  std::size_t document_count = 0;

  std::size_t levels() const { return steps.size(); }
  // Steps that contribute to the loss: 1 .. |R|-1.
  std::size_t scoring_steps() const {
    return steps.empty() ? 0 : steps.size() - 1;
  }
  // Index of the step whose `selected` set contains each document.
  std::vector<std::size_t> step_of_document() const;
};

// Parses `<rating> qid:<id> <fid>:<value> ... [# comment]` lines. Queries
// are ordered by first appearance; documents keep file order within a
// query. Missing feature ids are 0.0.
Dataset parse_letor(std::string_view text);
Dataset parse_letor(std::istream& in);
Dataset load_letor(const std::string& path);

// Dense LETOR text; `parse_letor(serialize_letor(d)) == d`.
std::string serialize_letor(const Dataset& dataset);

QueryGroup normalize_per_query(const QueryGroup& group);
Dataset normalize_per_query(const Dataset& dataset);

UniqueRatingPartition partition_unique_ratings(const QueryGroup& group);
UniqueRatingPartition partition_unique_ratings(const std::vector<Rating>& ratings);

}  // namespace unirank

#endif  // UNIRANK_DATA_HPP_
