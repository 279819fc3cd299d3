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

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "unirank/errors.hpp"

namespace unirank {

QueryGroup::QueryGroup(std::string query_id, std::vector<Document> documents)
    : query_id_(std::move(query_id)), documents_(std::move(documents)) {
  if (documents_.empty()) {
    throw ValidationError("query " + query_id_ + " has no documents");
  }
  const std::size_t l = documents_.front().features.size();
  for (const Document& doc : documents_) {
    if (doc.rating < 0) {
      throw ValidationError("negative rating in query " + query_id_);
    }
    if (doc.features.size() != l) {
      throw ValidationError("inconsistent feature count in query " + query_id_);
    }
    unique_ratings_.push_back(doc.rating);
  }
  std::sort(unique_ratings_.begin(), unique_ratings_.end(), std::greater<>());
  unique_ratings_.erase(std::unique(unique_ratings_.begin(), unique_ratings_.end()),
                        unique_ratings_.end());
}

std::size_t QueryGroup::feature_count() const {
  return documents_.empty() ? 0 : documents_.front().features.size();
}

std::vector<Rating> QueryGroup::ratings() const {
  std::vector<Rating> out;
  out.reserve(documents_.size());
  for (const Document& doc : documents_) out.push_back(doc.rating);
  return out;
}

Eigen::MatrixXd QueryGroup::feature_matrix() const {
  const auto n = static_cast<Eigen::Index>(documents_.size());
  const auto l = static_cast<Eigen::Index>(feature_count());
  Eigen::MatrixXd x(n, l);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < l; ++j) {
      x(i, j) = documents_[static_cast<std::size_t>(i)].features[static_cast<std::size_t>(j)];
    }
  }
  return x;
}

Dataset::Dataset(std::vector<QueryGroup> queries, std::size_t feature_count)
    : queries_(std::move(queries)), feature_count_(feature_count) {
  for (const QueryGroup& q : queries_) {
    if (q.feature_count() != feature_count_) {
      throw ValidationError("query " + q.query_id() +
                            " does not match the dataset feature count");
    }
  }
}

std::size_t Dataset::document_count() const {
  std::size_t n = 0;
  for (const QueryGroup& q : queries_) n += q.size();
  return n;
}

Rating Dataset::max_rating() const {
  Rating r = 0;
  for (const QueryGroup& q : queries_) r = std::max(r, q.max_rating());
  return r;
}

std::vector<std::size_t> UniqueRatingPartition::step_of_document() const {
  std::vector<std::size_t> out(document_count, 0);
  for (std::size_t t = 0; t < steps.size(); ++t) {
    for (std::size_t d : steps[t].selected) out[d] = t;
  }
  return out;
}

namespace {

struct RawDocument {
  std::string query_id;
  Rating rating;
  std::vector<std::pair<std::size_t, double>> sparse;
};

std::vector<std::string_view> split_tokens(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

double parse_double(std::string_view token, std::size_t line_no) {
  std::string buf(token);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size() || errno == ERANGE) {
    throw ParseError(line_no, "bad feature value '" + buf + "'");
  }
  return v;
}

Rating parse_rating(std::string_view token, std::size_t line_no) {
  long long value = 0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc() && ptr == last) {
    if (value < 0) {
      throw ValidationError("line " + std::to_string(line_no) + ": negative rating " +
                            std::string(token));
    }
    return static_cast<Rating>(value);
  }
  // A number, but not an integer grade.
  std::string buf(token);
  char* end = nullptr;
  std::strtod(buf.c_str(), &end);
  if (!buf.empty() && end == buf.c_str() + buf.size()) {
    throw ValidationError("line " + std::to_string(line_no) +
                          ": rating must be a non-negative integer, got " + buf);
  }
  throw ParseError(line_no, "bad rating '" + buf + "'");
}

RawDocument parse_line(std::string_view line, std::size_t line_no) {
  const auto tokens = split_tokens(line);
  if (tokens.size() < 2) throw ParseError(line_no, "expected '<rating> qid:<id> ...'");
  RawDocument doc;
  doc.rating = parse_rating(tokens[0], line_no);
  if (tokens[1].substr(0, 4) != "qid:" || tokens[1].size() == 4) {
    throw ParseError(line_no, "missing qid");
  }
  doc.query_id = std::string(tokens[1].substr(4));
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto tok = tokens[i];
    const auto colon = tok.find(':');
    if (colon == std::string_view::npos || colon == 0) {
      throw ParseError(line_no, "bad feature token '" + std::string(tok) + "'");
    }
    std::size_t fid = 0;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + colon, fid);
    if (ec != std::errc() || ptr != tok.data() + colon || fid == 0) {
      throw ParseError(line_no, "bad feature id in '" + std::string(tok) + "'");
    }
    doc.sparse.emplace_back(fid, parse_double(tok.substr(colon + 1), line_no));
  }
  std::sort(doc.sparse.begin(), doc.sparse.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  for (std::size_t i = 1; i < doc.sparse.size(); ++i) {
    if (doc.sparse[i].first == doc.sparse[i - 1].first) {
      throw ParseError(line_no, "duplicate feature id " + std::to_string(doc.sparse[i].first));
    }
  }
  return doc;
}

Dataset assemble(std::vector<RawDocument> raw) {
  std::size_t feature_count = 0;
  for (const RawDocument& d : raw) {
    if (!d.sparse.empty()) feature_count = std::max(feature_count, d.sparse.back().first);
  }
  std::vector<std::string> order;
  std::unordered_map<std::string, std::vector<Document>> grouped;
  for (RawDocument& d : raw) {
    Document doc;
    doc.query_id = d.query_id;
    doc.rating = d.rating;
    doc.features.assign(feature_count, 0.0);
    for (const auto& [fid, value] : d.sparse) doc.features[fid - 1] = value;
    auto [it, inserted] = grouped.try_emplace(d.query_id);
    if (inserted) order.push_back(d.query_id);
    it->second.push_back(std::move(doc));
  }
  std::vector<QueryGroup> queries;
  queries.reserve(order.size());
  for (const std::string& qid : order) {
    queries.emplace_back(qid, std::move(grouped[qid]));
  }
  return Dataset(std::move(queries), feature_count);
}

}  // namespace

Dataset parse_letor(std::istream& in) {
  std::vector<RawDocument> raw;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    if (split_tokens(view).empty()) continue;
    raw.push_back(parse_line(view, line_no));
  }
  return assemble(std::move(raw));
}

Dataset parse_letor(std::string_view text) {
  std::istringstream in{std::string(text)};
  return parse_letor(in);
}

Dataset load_letor(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_letor(in);
}

std::string serialize_letor(const Dataset& dataset) {
  std::string out;
  char buf[64];
  for (const QueryGroup& q : dataset.queries()) {
    for (const Document& doc : q.documents()) {
      out += std::to_string(doc.rating);
      out += " qid:";
      out += doc.query_id;
      for (std::size_t j = 0; j < doc.features.size(); ++j) {
        std::snprintf(buf, sizeof(buf), " %zu:%.17g", j + 1, doc.features[j]);
        out += buf;
      }
      out += '\n';
    }
  }
  return out;
}

QueryGroup normalize_per_query(const QueryGroup& group) {
  std::vector<Document> docs = group.documents();
  const std::size_t l = group.feature_count();
  for (std::size_t j = 0; j < l; ++j) {
    double lo = docs.front().features[j];
    double hi = lo;
    for (const Document& d : docs) {
      lo = std::min(lo, d.features[j]);
      hi = std::max(hi, d.features[j]);
    }
    const double range = hi - lo;
    for (Document& d : docs) {
      d.features[j] = range > 0.0 ? (d.features[j] - lo) / range : 0.0;
    }
  }
  return QueryGroup(group.query_id(), std::move(docs));
}

Dataset normalize_per_query(const Dataset& dataset) {
  std::vector<QueryGroup> queries;
  queries.reserve(dataset.queries().size());
  for (const QueryGroup& q : dataset.queries()) queries.push_back(normalize_per_query(q));
  return Dataset(std::move(queries), dataset.feature_count());
}

UniqueRatingPartition partition_unique_ratings(const std::vector<Rating>& ratings) {
  UniqueRatingPartition partition;
  partition.document_count = ratings.size();
  std::vector<Rating> levels(ratings);
  std::sort(levels.begin(), levels.end(), std::greater<>());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());
  for (Rating level : levels) {
    PartitionStep step;
    step.rating = level;
    for (std::size_t d = 0; d < ratings.size(); ++d) {
      if (ratings[d] == level) {
        step.selected.push_back(d);
      } else if (ratings[d] < level) {
        step.lower.push_back(d);
      }
    }
    partition.steps.push_back(std::move(step));
  }
  return partition;
}

UniqueRatingPartition partition_unique_ratings(const QueryGroup& group) {
  return partition_unique_ratings(group.ratings());
}

}  // namespace unirank
