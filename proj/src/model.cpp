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

#include "unirank/model.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>

#include "unirank/errors.hpp"

namespace unirank {

namespace {

constexpr const char* kMagic = "unirank-model";
constexpr int kFormatVersion = 1;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ValidationError("option '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

std::size_t parse_count(const std::string& key, const std::string& text, std::size_t min) {
  const auto v = parse_number<std::size_t>(key, text);
  if (v < min) {
    throw ValidationError("option '" + key + "' must be at least " + std::to_string(min));
  }
  return v;
}

double parse_positive(const std::string& key, const std::string& text) {
  const auto v = parse_number<double>(key, text);
  if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("option '" + key + "' must be positive");
  return v;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1") return true;
  if (text == "false" || text == "0") return false;
  throw ValidationError("option '" + key + "' expects true or false, got '" + text + "'");
}

std::vector<std::size_t> parse_list(const std::string& key, const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_count(key, trim(item), 1));
  if (out.empty()) throw ValidationError("option '" + key + "' needs at least one value");
  return out;
}

std::string join(const std::vector<std::size_t>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

struct OptionEntry {
  std::string key;
  std::function<void(TrainOptions&, const std::string&)> set;
  std::function<std::string(const TrainOptions&)> get;
};

const std::vector<OptionEntry>& option_table() {
  static const std::vector<OptionEntry> table = {
      {"model", [](TrainOptions& o, const std::string& v) { o.model = parse_model_type(v); },
       [](const TrainOptions& o) { return to_string(o.model); }},
      {"normalize", [](TrainOptions& o, const std::string& v) { o.normalize = parse_bool("normalize", v); },
       [](const TrainOptions& o) { return std::string(o.normalize ? "true" : "false"); }},
      {"seed", [](TrainOptions& o, const std::string& v) { o.neural.seed = parse_number<std::uint64_t>("seed", v); },
       [](const TrainOptions& o) { return std::to_string(o.neural.seed); }},
      {"window",
       [](TrainOptions& o, const std::string& v) {
         if (v == "none") {
           o.gbdt.lambda.window.reset();
         } else {
           o.gbdt.lambda.window = parse_count("window", v, 1);
         }
       },
       [](const TrainOptions& o) {
         return o.gbdt.lambda.window ? std::to_string(*o.gbdt.lambda.window) : std::string("none");
       }},
      {"cutoffs",
       [](TrainOptions& o, const std::string& v) { o.neural.cutoffs = o.gbdt.cutoffs = parse_list("cutoffs", v); },
       [](const TrainOptions& o) { return join(o.neural.cutoffs); }},
      {"selection-tolerance",
       [](TrainOptions& o, const std::string& v) {
         const double t = parse_number<double>("selection-tolerance", v);
         if (!(t >= 0.0)) throw ValidationError("option 'selection-tolerance' must be non-negative");
         o.neural.selection_tolerance = o.gbdt.selection_tolerance = t;
       },
       [](const TrainOptions& o) { return format_double(o.neural.selection_tolerance); }},
      {"learning-rate",
       [](TrainOptions& o, const std::string& v) { o.neural.learning_rate = parse_positive("learning-rate", v); },
       [](const TrainOptions& o) { return format_double(o.neural.learning_rate); }},
      {"epochs", [](TrainOptions& o, const std::string& v) { o.neural.max_epochs = parse_count("epochs", v, 1); },
       [](const TrainOptions& o) { return std::to_string(o.neural.max_epochs); }},
      {"patience", [](TrainOptions& o, const std::string& v) { o.neural.patience = parse_count("patience", v, 0); },
       [](const TrainOptions& o) { return std::to_string(o.neural.patience); }},
      {"hidden",
       [](TrainOptions& o, const std::string& v) {
         const auto dims = parse_list("hidden", v);
         if (dims.size() != 2) throw ValidationError("option 'hidden' expects two sizes, e.g. 100,50");
         o.neural.hidden1 = dims[0];
         o.neural.hidden2 = dims[1];
       },
       [](const TrainOptions& o) { return join({o.neural.hidden1, o.neural.hidden2}); }},
      {"rnn-hidden", [](TrainOptions& o, const std::string& v) { o.neural.rnn_hidden = parse_count("rnn-hidden", v, 0); },
       [](const TrainOptions& o) { return std::to_string(o.neural.rnn_hidden); }},
      {"final-activation",
       [](TrainOptions& o, const std::string& v) { o.neural.final_activation = parse_bool("final-activation", v); },
       [](const TrainOptions& o) { return std::string(o.neural.final_activation ? "true" : "false"); }},
      {"grad-clip", [](TrainOptions& o, const std::string& v) { o.neural.grad_clip_norm = parse_positive("grad-clip", v); },
       [](const TrainOptions& o) { return format_double(o.neural.grad_clip_norm); }},
      {"max-learners",
       [](TrainOptions& o, const std::string& v) { o.neural.max_learners = parse_count("max-learners", v, 1); },
       [](const TrainOptions& o) { return std::to_string(o.neural.max_learners); }},
      {"trees", [](TrainOptions& o, const std::string& v) { o.gbdt.num_trees = parse_count("trees", v, 0); },
       [](const TrainOptions& o) { return std::to_string(o.gbdt.num_trees); }},
      {"early-stopping",
       [](TrainOptions& o, const std::string& v) { o.gbdt.early_stopping_rounds = parse_count("early-stopping", v, 0); },
       [](const TrainOptions& o) { return std::to_string(o.gbdt.early_stopping_rounds); }},
      {"shrinkage", [](TrainOptions& o, const std::string& v) { o.gbdt.shrinkage = parse_positive("shrinkage", v); },
       [](const TrainOptions& o) { return format_double(o.gbdt.shrinkage); }},
      {"leaves", [](TrainOptions& o, const std::string& v) { o.gbdt.tree.max_leaves = parse_count("leaves", v, 1); },
       [](const TrainOptions& o) { return std::to_string(o.gbdt.tree.max_leaves); }},
      {"min-data", [](TrainOptions& o, const std::string& v) { o.gbdt.tree.min_data_in_leaf = parse_count("min-data", v, 1); },
       [](const TrainOptions& o) { return std::to_string(o.gbdt.tree.min_data_in_leaf); }},
      {"lambda",
       [](TrainOptions& o, const std::string& v) {
         const double l = parse_number<double>("lambda", v);
         if (!(l >= 0.0)) throw ValidationError("option 'lambda' must be non-negative");
         o.gbdt.tree.lambda = l;
       },
       [](const TrainOptions& o) { return format_double(o.gbdt.tree.lambda); }},
      {"bins", [](TrainOptions& o, const std::string& v) { o.gbdt.max_bins = parse_count("bins", v, 2); },
       [](const TrainOptions& o) { return std::to_string(o.gbdt.max_bins); }},
      {"sigma", [](TrainOptions& o, const std::string& v) { o.gbdt.lambda.sigma = parse_positive("sigma", v); },
       [](const TrainOptions& o) { return format_double(o.gbdt.lambda.sigma); }},
      {"symmetric-hessian",
       [](TrainOptions& o, const std::string& v) { o.gbdt.lambda.symmetric_hessian = parse_bool("symmetric-hessian", v); },
       [](const TrainOptions& o) { return std::string(o.gbdt.lambda.symmetric_hessian ? "true" : "false"); }},
      {"delta-z-epsilon",
       [](TrainOptions& o, const std::string& v) { o.gbdt.lambda.epsilon = parse_positive("delta-z-epsilon", v); },
       [](const TrainOptions& o) { return format_double(o.gbdt.lambda.epsilon); }},
  };
  return table;
}

}  // namespace

ModelType parse_model_type(const std::string& name) {
  if (name == "urank") return ModelType::kUrank;
  if (name == "uboost") return ModelType::kUboost;
  if (name == "umart") return ModelType::kUmart;
  if (name == "urboost") return ModelType::kUrboost;
  throw ValidationError("unknown model '" + name + "' (expected urank, uboost, umart or urboost)");
}

std::string to_string(ModelType type) {
  switch (type) {
    case ModelType::kUrank: return "urank";
    case ModelType::kUboost: return "uboost";
    case ModelType::kUmart: return "umart";
    case ModelType::kUrboost: return "urboost";
  }
  return "unknown";
}

void apply_option(TrainOptions& options, const std::string& key, const std::string& value) {
  for (const OptionEntry& e : option_table()) {
    if (e.key == key) {
      e.set(options, trim(value));
      return;
    }
  }
  throw ValidationError("unknown option '" + key + "'");
}

void apply_options_text(TrainOptions& options, const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(number, "expected key=value");
    try {
      apply_option(options, trim(line.substr(0, eq)), line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ParseError(number, e.what());
    }
  }
}

std::string options_to_text(const TrainOptions& options) {
  std::string out;
  for (const OptionEntry& e : option_table()) out += e.key + "=" + e.get(options) + "\n";
  return out;
}

const std::vector<std::string>& option_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> k;
    for (const OptionEntry& e : option_table()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

std::size_t Model::learner_count() const {
  return type == ModelType::kUmart ? trees.trees.size() : neural.size();
}

Eigen::VectorXd Model::score_matrix(const Eigen::MatrixXd& features) const {
  if (static_cast<std::size_t>(features.cols()) != feature_count) {
    throw ValidationError("data has " + std::to_string(features.cols()) +
                          " features, model expects " + std::to_string(feature_count));
  }
  if (type == ModelType::kUmart) return trees.predict(features);
  return neural.score(features);
}

std::vector<double> Model::score(const QueryGroup& query) const {
  const Eigen::VectorXd f =
      score_matrix(normalize ? normalize_per_query(query).feature_matrix() : query.feature_matrix());
  return std::vector<double>(f.data(), f.data() + f.size());
}

std::vector<std::vector<double>> score_dataset(const Model& model, const Dataset& dataset) {
  if (dataset.feature_count() != model.feature_count) {
    throw ValidationError("data has " + std::to_string(dataset.feature_count()) +
                          " features, model expects " + std::to_string(model.feature_count));
  }
  std::vector<std::vector<double>> out;
  for (const QueryGroup& q : dataset.queries()) out.push_back(model.score(q));
  return out;
}

TrainOutcome train_model(const Dataset& train_in, const Dataset& valid_in, const TrainOptions& options) {
  if (options.model != ModelType::kUmart && options.gbdt.lambda.window) {
    throw ValidationError("window applies to umart only; neural models use the full lower pool");
  }
  if (!valid_in.empty() && valid_in.feature_count() != train_in.feature_count()) {
    throw ValidationError("training and validation data differ in feature count");
  }
  const Dataset train = options.normalize ? normalize_per_query(train_in) : train_in;
  const Dataset valid = options.normalize ? normalize_per_query(valid_in) : valid_in;

  TrainOutcome out;
  out.model.type = options.model;
  out.model.normalize = options.normalize;
  out.model.feature_count = train.feature_count();
  switch (options.model) {
    case ModelType::kUrank: {
      UrankResult r = train_urank(train, valid, options.neural);
      out.model.neural.kind = LearnerKind::kMlp;
      out.model.neural.mlp_learners.push_back(std::move(r.params));
      out.model.neural.coefficients.push_back(1.0);
      out.best_key = std::move(r.best_key);
      out.log = std::move(r.log);
      break;
    }
    case ModelType::kUboost:
    case ModelType::kUrboost: {
      BoostResult r = options.model == ModelType::kUboost ? uboost_train(train, valid, options.neural)
                                                          : urboost_train(train, valid, options.neural);
      out.model.neural = std::move(r.ensemble);
      out.best_key = std::move(r.best_key);
      out.log = std::move(r.log);
      break;
    }
    case ModelType::kUmart: {
      UmartResult r = umart_train(train, valid, options.gbdt);
      out.model.trees = std::move(r.model);
      out.best_key = std::move(r.best_key);
      out.log = std::move(r.log);
      break;
    }
  }
  return out;
}

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  out << "matrix " << m.rows() << ' ' << m.cols() << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_double(m(i, j));
    out << '\n';
  }
}

std::string next_token(std::istream& in, const char* what) {
  std::string word;
  if (!(in >> word)) throw ValidationError(std::string("model file truncated: expected ") + what);
  return word;
}

void expect(std::istream& in, const std::string& token) {
  const std::string word = next_token(in, token.c_str());
  if (word != token) {
    throw ValidationError("model file: expected '" + token + "', found '" + word + "'");
  }
}

template <typename T>
T read_number(std::istream& in, const char* what) {
  const std::string word = next_token(in, what);
  T v{};
  const auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), v);
  if (ec != std::errc() || ptr != word.data() + word.size()) {
    throw ValidationError(std::string("model file: bad ") + what + " '" + word + "'");
  }
  return v;
}

// A negative `cols` accepts any column count.
Eigen::MatrixXd read_matrix(std::istream& in, Eigen::Index rows, Eigen::Index cols = -1) {
  expect(in, "matrix");
  const auto r = read_number<Eigen::Index>(in, "row count");
  const auto c = read_number<Eigen::Index>(in, "column count");
  if (r != rows || (cols >= 0 && c != cols) || c <= 0) {
    throw ValidationError("model file: matrix is " + std::to_string(r) + "x" + std::to_string(c) +
                          ", expected " + std::to_string(rows) + " rows" +
                          (cols >= 0 ? " and " + std::to_string(cols) + " columns" : ""));
  }
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) {
      m(i, j) = read_number<double>(in, "matrix entry");
      if (!std::isfinite(m(i, j))) throw ValidationError("model file: non-finite weight");
    }
  }
  return m;
}

}  // namespace

// Layout (whitespace separated, one record per line):
//   unirank-model 1
//   type <urank|uboost|umart|urboost>
//   normalize <0|1>
//   features <l>
//   learners <M>
// then per neural learner
//   learner mlp <coefficient> <final activation 0|1>   followed by W1, W2, W3
//   learner rnn <coefficient>                           followed by W1, W2, Wx, Wh, b, w
// where each matrix is "matrix <rows> <cols>" and its rows; or, for umart,
// the tree ensemble block.
void write_model(std::ostream& out, const Model& model) {
  out << kMagic << ' ' << kFormatVersion << '\n'
      << "type " << to_string(model.type) << '\n'
      << "normalize " << (model.normalize ? 1 : 0) << '\n'
      << "features " << model.feature_count << '\n'
      << "learners " << model.learner_count() << '\n';
  if (model.type == ModelType::kUmart) {
    write_tree_ensemble(out, model.trees);
    return;
  }
  for (std::size_t m = 0; m < model.neural.size(); ++m) {
    const double rho = model.neural.coefficients[m];
    if (model.neural.kind == LearnerKind::kMlp) {
      const MlpParams& p = model.neural.mlp_learners[m];
      out << "learner mlp " << format_double(rho) << ' ' << (p.final_activation ? 1 : 0) << '\n';
      for (const Eigen::MatrixXd* t : p.tensors()) write_matrix(out, *t);
    } else {
      out << "learner rnn " << format_double(rho) << '\n';
      for (const Eigen::MatrixXd* t : model.neural.rnn_learners[m].tensors()) write_matrix(out, *t);
    }
  }
  if (!out) throw IoError("failed to write model");
}

Model read_model(std::istream& in) {
  Model model;
  const std::string magic = next_token(in, "header");
  if (magic != kMagic) throw ValidationError("not a unirank model file");
  const int version = read_number<int>(in, "format version");
  if (version != kFormatVersion) {
    throw ValidationError("unsupported model format version " + std::to_string(version));
  }
  expect(in, "type");
  model.type = parse_model_type(next_token(in, "model type"));
  expect(in, "normalize");
  model.normalize = read_number<int>(in, "normalize flag") != 0;
  expect(in, "features");
  model.feature_count = read_number<std::size_t>(in, "feature count");
  expect(in, "learners");
  const auto learners = read_number<std::size_t>(in, "learner count");

  if (model.type == ModelType::kUmart) {
    model.trees = read_tree_ensemble(in);
    if (model.trees.trees.size() != learners || model.trees.feature_count != model.feature_count) {
      throw ValidationError("model file: tree block disagrees with the manifest");
    }
    return model;
  }
  if (learners == 0) throw ValidationError("model file: neural model without learners");
  if (model.type == ModelType::kUrank && learners != 1) {
    throw ValidationError("model file: urank holds exactly one learner");
  }
  const bool rnn = model.type == ModelType::kUrboost;
  model.neural.kind = rnn ? LearnerKind::kRnn : LearnerKind::kMlp;
  const auto l = static_cast<Eigen::Index>(model.feature_count);
  for (std::size_t m = 0; m < learners; ++m) {
    expect(in, "learner");
    expect(in, rnn ? "rnn" : "mlp");
    model.neural.coefficients.push_back(read_number<double>(in, "coefficient"));
    if (rnn) {
      RnnScorerParams p;
      p.w1 = read_matrix(in, l);
      p.w2 = read_matrix(in, p.w1.cols());
      p.wx = read_matrix(in, p.w2.cols());
      p.wh = read_matrix(in, p.wx.cols(), p.wx.cols());
      p.b = read_matrix(in, 1, p.wx.cols());
      p.w = read_matrix(in, p.wx.cols() + p.w2.cols(), 1);
      model.neural.rnn_learners.push_back(std::move(p));
    } else {
      MlpParams p;
      p.final_activation = read_number<int>(in, "activation flag") != 0;
      p.w1 = read_matrix(in, l);
      p.w2 = read_matrix(in, p.w1.cols());
      p.w3 = read_matrix(in, p.w2.cols(), 1);
      model.neural.mlp_learners.push_back(std::move(p));
    }
  }
  return model;
}

void save_model(const std::string& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  write_model(out, model);
  out.flush();
  if (!out) throw IoError("failed to write '" + path + "'");
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace unirank
