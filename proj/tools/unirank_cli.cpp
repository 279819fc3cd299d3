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

// Command-line front end: train, eval and five-fold cross-validation.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "unirank/unirank.h"

namespace {

namespace fs = std::filesystem;

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(unirank_status status, const std::string& context = "") {
  if (status != UNIRANK_OK) {
    throw Failure(context.empty() ? unirank_last_error() : context + ": " + unirank_last_error());
  }
}

std::string take(char* s) {
  std::string out(s);
  unirank_string_free(s);
  return out;
}

struct DatasetFree {
  void operator()(unirank_dataset* p) const { unirank_dataset_free(p); }
};
struct ConfigFree {
  void operator()(unirank_config* p) const { unirank_config_free(p); }
};
struct ModelFree {
  void operator()(unirank_model* p) const { unirank_model_free(p); }
};
struct ReportFree {
  void operator()(unirank_report* p) const { unirank_report_free(p); }
};
using Dataset = std::unique_ptr<unirank_dataset, DatasetFree>;
using Config = std::unique_ptr<unirank_config, ConfigFree>;
using Model = std::unique_ptr<unirank_model, ModelFree>;
using Report = std::unique_ptr<unirank_report, ReportFree>;

Dataset load_dataset(const std::string& path) {
  unirank_dataset* d = nullptr;
  check(unirank_dataset_load(path.c_str(), &d));
  return Dataset(d);
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw Failure("cannot write '" + path.string() + "'");
}

std::vector<size_t> parse_cutoffs(const std::string& text) {
  std::vector<size_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    size_t used = 0;
    unsigned long v = 0;
    try {
      v = std::stoul(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size() || v == 0) throw Failure("invalid cutoff list '" + text + "'");
    out.push_back(v);
  }
  if (out.empty()) throw Failure("invalid cutoff list '" + text + "'");
  return out;
}

struct EvalFlags {
  std::string cutoffs = "1,3,5,10";
  std::string policy = "skip";
  int max_grade = -1;
};

void add_eval_flags(CLI::App* cmd, EvalFlags& flags) {
  cmd->add_option("--cutoffs", flags.cutoffs, "Comma-separated metric cutoffs")
      ->capture_default_str();
  cmd->add_option("--zero-label-policy", flags.policy, "Queries whose ratings are all zero")
      ->check(CLI::IsMember({"skip", "one"}))
      ->capture_default_str();
  cmd->add_option("--max-grade", flags.max_grade,
                  "Grade ceiling for ERR (default: largest rating in the data)");
}

Report evaluate(const unirank_model* model, const unirank_dataset* data, const EvalFlags& flags) {
  const std::vector<size_t> cutoffs = parse_cutoffs(flags.cutoffs);
  unirank_report* r = nullptr;
  check(unirank_evaluate(model, data, cutoffs.data(), cutoffs.size(), flags.policy.c_str(),
                         flags.max_grade, &r));
  return Report(r);
}

struct TrainFlags {
  std::string model;
  std::string config_path;
  std::vector<std::string> settings;
  std::string window;
  std::string seed;
};

void add_train_flags(CLI::App* cmd, TrainFlags& flags) {
  cmd->add_option("--model", flags.model, "urank, uboost, umart or urboost")
      ->check(CLI::IsMember({"urank", "uboost", "umart", "urboost"}));
  cmd->add_option("--config", flags.config_path, "key=value option file")->check(CLI::ExistingFile);
  cmd->add_option("--set", flags.settings, "Override one option, key=value (repeatable)");
  cmd->add_option("--window", flags.window, "uMart window size u >= 1");
  cmd->add_option("--seed", flags.seed, "Random seed");
}

// File options first, then --set pairs, then the dedicated flags.
Config build_config(const TrainFlags& flags) {
  unirank_config* raw = nullptr;
  check(unirank_config_new(&raw));
  Config config(raw);
  if (!flags.config_path.empty()) check(unirank_config_load(config.get(), flags.config_path.c_str()));
  for (const std::string& kv : flags.settings) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw Failure("--set expects key=value, got '" + kv + "'");
    check(unirank_config_set(config.get(), kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
  }
  if (!flags.model.empty()) check(unirank_config_set(config.get(), "model", flags.model.c_str()));
  if (!flags.window.empty()) check(unirank_config_set(config.get(), "window", flags.window.c_str()));
  if (!flags.seed.empty()) check(unirank_config_set(config.get(), "seed", flags.seed.c_str()));
  return config;
}

const char* kLogHeader = "learner\tepoch\ttrain_loss\tvalid_ndcg\n";

Model train_and_save(const unirank_config* config, const unirank_dataset* train,
                     const unirank_dataset* valid, const fs::path& out_dir) {
  unirank_model* raw = nullptr;
  check(unirank_train(config, train, valid, &raw));
  Model model(raw);
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    char* text = nullptr;
    check(unirank_config_to_text(config, &text));
    write_file(out_dir / "config.txt", take(text));
    check(unirank_model_training_log(model.get(), &text));
    write_file(out_dir / "training_log.tsv", kLogHeader + take(text));
    check(unirank_model_save(model.get(), (out_dir / "model.txt").string().c_str()));
  }
  return model;
}

std::string fixed4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

int run(int argc, char** argv) {
  CLI::App app{"Learning-to-rank with the unique-rating listwise loss"};
  app.set_version_flag("--version", std::string(unirank_version()));
  app.require_subcommand(1);

  auto* train_cmd = app.add_subcommand("train", "Train a model and write checkpoint, log and config");
  TrainFlags train_flags;
  EvalFlags train_eval;
  std::string train_path, valid_path, test_path, out_dir;
  add_train_flags(train_cmd, train_flags);
  train_cmd->add_option("--train", train_path, "Training data")->required();
  train_cmd->add_option("--valid", valid_path, "Validation data for checkpoint selection")->required();
  train_cmd->add_option("--test", test_path, "Optional test data, evaluated after training");
  train_cmd->add_option("--out", out_dir, "Output directory")->required();
  add_eval_flags(train_cmd, train_eval);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint; prints a TSV report");
  std::string checkpoint, eval_test;
  EvalFlags eval_flags;
  eval_cmd->add_option("--checkpoint", checkpoint, "Model file written by train")->required();
  eval_cmd->add_option("--test", eval_test, "Test data")->required();
  add_eval_flags(eval_cmd, eval_flags);

  auto* cv_cmd = app.add_subcommand("cv", "Cross-validate over Fold1..FoldN/{train,vali,test}.txt");
  TrainFlags cv_flags;
  EvalFlags cv_eval;
  std::string folds_root, cv_out;
  std::size_t folds = 5;
  add_train_flags(cv_cmd, cv_flags);
  cv_cmd->add_option("--folds-root", folds_root, "Directory holding the fold directories")->required();
  cv_cmd->add_option("--folds", folds, "Number of folds")->capture_default_str()->check(CLI::PositiveNumber);
  cv_cmd->add_option("--out", cv_out, "Optional directory for per-fold outputs");
  add_eval_flags(cv_cmd, cv_eval);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "unirank: error: " << e.what() << '\n';
    return 2;
  }

  if (*train_cmd) {
    parse_cutoffs(train_eval.cutoffs);
    const Config config = build_config(train_flags);
    const Dataset train = load_dataset(train_path);
    const Dataset valid = load_dataset(valid_path);
    const Dataset test = test_path.empty() ? Dataset() : load_dataset(test_path);
    const Model model = train_and_save(config.get(), train.get(), valid.get(), out_dir);
    if (test) {
      const Report report = evaluate(model.get(), test.get(), train_eval);
      char* tsv = nullptr;
      check(unirank_report_to_tsv(report.get(), &tsv));
      const std::string text = take(tsv);
      write_file(fs::path(out_dir) / "test_report.tsv", text);
      std::cout << text;
    }
    return 0;
  }

  if (*eval_cmd) {
    parse_cutoffs(eval_flags.cutoffs);
    unirank_model* raw = nullptr;
    check(unirank_model_load(checkpoint.c_str(), &raw));
    const Model model(raw);
    const Dataset test = load_dataset(eval_test);
    const Report report = evaluate(model.get(), test.get(), eval_flags);
    char* tsv = nullptr;
    check(unirank_report_to_tsv(report.get(), &tsv));
    std::cout << take(tsv);
    return 0;
  }

  // cv
  const std::vector<size_t> cutoffs = parse_cutoffs(cv_eval.cutoffs);
  const Config config = build_config(cv_flags);
  for (std::size_t f = 1; f <= folds; ++f) {
    const fs::path dir = fs::path(folds_root) / ("Fold" + std::to_string(f));
    for (const char* split : {"train.txt", "vali.txt", "test.txt"}) {
      if (!fs::is_regular_file(dir / split)) {
        throw Failure("fold " + std::to_string(f) + ": missing '" + (dir / split).string() + "'");
      }
    }
  }
  std::vector<std::vector<double>> rows;
  for (std::size_t f = 1; f <= folds; ++f) {
    const std::string fold = "fold " + std::to_string(f);
    const fs::path dir = fs::path(folds_root) / ("Fold" + std::to_string(f));
    try {
      const Dataset train = load_dataset((dir / "train.txt").string());
      const Dataset valid = load_dataset((dir / "vali.txt").string());
      const Dataset test = load_dataset((dir / "test.txt").string());
      const fs::path out = cv_out.empty() ? fs::path() : fs::path(cv_out) / ("Fold" + std::to_string(f));
      const Model model = train_and_save(config.get(), train.get(), valid.get(), out);
      const Report report = evaluate(model.get(), test.get(), cv_eval);
      std::vector<double> row;
      for (auto getter : {unirank_report_ndcg, unirank_report_err}) {
        for (size_t k : cutoffs) {
          double v = 0.0;
          check(getter(report.get(), k, &v));
          row.push_back(v);
        }
      }
      if (!out.empty()) {
        char* tsv = nullptr;
        check(unirank_report_to_tsv(report.get(), &tsv));
        write_file(out / "test_report.tsv", take(tsv));
      }
      rows.push_back(std::move(row));
    } catch (const Failure& e) {
      throw Failure(fold + ": " + e.what());
    }
  }

  std::string table = "fold";
  for (const char* metric : {"NDCG", "ERR"}) {
    for (size_t k : cutoffs) table += std::string("\t") + metric + "@" + std::to_string(k);
  }
  table += '\n';
  std::vector<double> mean(rows.front().size(), 0.0);
  for (std::size_t f = 0; f < rows.size(); ++f) {
    table += std::to_string(f + 1);
    for (std::size_t i = 0; i < rows[f].size(); ++i) {
      table += "\t" + fixed4(rows[f][i]);
      mean[i] += rows[f][i] / static_cast<double>(rows.size());
    }
    table += '\n';
  }
  table += "mean";
  for (double v : mean) table += "\t" + fixed4(v);
  table += '\n';
  if (!cv_out.empty()) write_file(fs::path(cv_out) / "cv_report.tsv", table);
  std::cout << table;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::string message = e.what();
    for (char& c : message) {
      if (c == '\n') c = ' ';
    }
    std::cerr << "unirank: error: " << message << '\n';
    return 1;
  }
}
