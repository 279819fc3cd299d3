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

// Model-agnostic training, scoring and persistence for the four rankers,
// plus the flat key=value option format shared by the C API and the CLI.

#ifndef UNIRANK_MODEL_HPP_
#define UNIRANK_MODEL_HPP_

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "unirank/boosting.hpp"
#include "unirank/data.hpp"
#include "unirank/gbdt.hpp"
#include "unirank/training.hpp"

namespace unirank {

enum class ModelType { kUrank, kUboost, kUmart, kUrboost };

ModelType parse_model_type(const std::string& name);
std::string to_string(ModelType type);

struct TrainOptions {
  ModelType model = ModelType::kUrank;
  // Min-max scale every query's features before training and scoring.
  bool normalize = true;
  NeuralConfig neural;
  GbdtConfig gbdt;
};

// Sets one option from its textual form; throws ValidationError on an
// unknown key or a malformed value.
void apply_option(TrainOptions& options, const std::string& key, const std::string& value);

// Lines of key=value; blank lines and '#' comments are ignored.
void apply_options_text(TrainOptions& options, const std::string& text);

// Every option in key=value form, one per line, in a fixed order.
std::string options_to_text(const TrainOptions& options);

// Option keys accepted by apply_option, in the order options_to_text uses.
const std::vector<std::string>& option_keys();

struct Model {
  ModelType type = ModelType::kUrank;
  bool normalize = true;
  std::size_t feature_count = 0;
  NeuralEnsemble neural;
  TreeEnsembleModel trees;

  std::size_t learner_count() const;
  // Scores one query; applies the model's normalization first.
  std::vector<double> score(const QueryGroup& query) const;
  Eigen::VectorXd score_matrix(const Eigen::MatrixXd& features) const;
};

struct TrainOutcome {
  Model model;
  SelectionKey best_key;
  TrainingLog log;
};

TrainOutcome train_model(const Dataset& train, const Dataset& valid, const TrainOptions& options);

std::vector<std::vector<double>> score_dataset(const Model& model, const Dataset& dataset);

void write_model(std::ostream& out, const Model& model);
Model read_model(std::istream& in);
void save_model(const std::string& path, const Model& model);
Model load_model(const std::string& path);

}  // namespace unirank

#endif  // UNIRANK_MODEL_HPP_
