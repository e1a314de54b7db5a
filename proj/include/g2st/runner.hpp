// Copyright 2026 The G2ST Toolkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef G2ST_RUNNER_HPP_
#define G2ST_RUNNER_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "g2st/corpus.hpp"
#include "g2st/metrics.hpp"
#include "g2st/model.hpp"
#include "g2st/tokenizer.hpp"
#include "g2st/training.hpp"
#include "json.hpp"

namespace g2st {

// Settings for building a general-purpose base model when no base
// checkpoint is supplied.
struct BaseModelOptions {
  std::size_t vocab_size = 800;
  int epochs = 10;
  double learning_rate = 1e-3;
  std::size_t batch_size = 64;
  double dropout_rate = 0.1;

  nlohmann::ordered_json ToJson() const;
  static BaseModelOptions FromJson(const nlohmann::json& doc);
};

// Relative paths resolve against the working directory.
struct RunPaths {
  std::filesystem::path term_pairs;
  std::filesystem::path parallel_corpus;
  std::filesystem::path parallel_test;   // empty: split parallel_corpus
  std::filesystem::path general_corpus;  // used when no base checkpoint is given
  std::filesystem::path base_tokenizer;
  std::filesystem::path base_checkpoint;
  std::filesystem::path output_dir;
};

struct RunConfig {
  RunPaths paths;
  TrainConfig train;
  StagePlan plan;
  ModelConfig model;  // vocab_size is taken from the base tokenizer
  BaseModelOptions base;
  std::size_t train_count = 0;
  std::size_t decode_max_len = 64;
  std::uint64_t seed = 0;

  // Every problem found, in a stable order. Empty means valid.
  std::vector<std::string> Problems() const;
  // Throws kConfig with all problems joined.
  void Validate() const;

  nlohmann::ordered_json ToJson() const;
  static RunConfig FromJson(const nlohmann::json& doc);
  static RunConfig Load(const std::filesystem::path& path);
  // FNV-1a of the canonical JSON form, as 16 hex digits.
  std::string Hash() const;
};

using ProgressFn = std::function<void(const std::string&)>;

struct BaseModel {
  ModelParameters model;
  Tokenizer tokenizer;
};

// Trains a tokenizer on both sides of `general` and pretrains a model on it.
BaseModel PretrainBaseModel(const Corpus& general, const ModelConfig& model_config,
                            const BaseModelOptions& options, std::uint64_t seed,
                            const ProgressFn& progress = {});

// Full run: base model, fine-tuning stages, test-set translation and
// evaluation. Writes all artifacts under paths.output_dir and returns the
// pipeline report.
nlohmann::ordered_json RunPipeline(const RunConfig& config, const ProgressFn& progress = {});

// Rows A-D under output_dir/row_{A,B,C,D}; returns the ablation summary,
// also written to output_dir/ablation.json.
nlohmann::ordered_json RunAblation(const RunConfig& config, const ProgressFn& progress = {});

struct SourceRecord {
  std::string id;
  std::string text;
};

// JSON Lines with `source` (or `text`) and optional `id`; missing ids get
// the line number.
std::vector<SourceRecord> LoadSourceRecords(const std::filesystem::path& path);

std::vector<std::string> TranslateAll(const ModelParameters& model, const Tokenizer& tokenizer,
                                      const std::vector<std::string>& sources,
                                      std::size_t max_len);

// Errors with kInvalidArgument naming both sizes when the tokenizer and
// checkpoint vocabularies differ.
void CheckVocabMatch(const ModelParameters& model, const Tokenizer& tokenizer);

// Returns the number of lines written.
std::size_t TranslateFile(const std::filesystem::path& checkpoint,
                          const std::filesystem::path& tokenizer,
                          const std::filesystem::path& input,
                          const std::filesystem::path& output, std::size_t max_len);

// Joins hypotheses and references by id. Each record's text is `text`,
// or `target` when absent. Ids present on one side only are listed in the
// error.
EvaluationReport EvaluateFiles(const std::filesystem::path& hypotheses,
                               const std::filesystem::path& references);

}  // namespace g2st

#endif  // G2ST_RUNNER_HPP_
