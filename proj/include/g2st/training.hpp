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

// Training objective (token-level cross-entropy plus the bidirectional-KL
// consistency term over two dropout passes), Adam, and the two-stage
// general-to-specialized fine-tuning orchestrator.

#ifndef G2ST_TRAINING_HPP_
#define G2ST_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "g2st/corpus.hpp"
#include "g2st/model.hpp"
#include "g2st/tokenizer.hpp"
#include "json.hpp"

namespace g2st {

// Floor applied to probabilities inside logarithms.
inline constexpr double kProbFloor = 1e-12;

struct TrainConfig {
  std::size_t batch_size = 64;
  double learning_rate = 5e-5;
  double dropout_rate = 0.1;
  double alpha = 0.05;  // weight of the KL consistency term
  bool sse_enabled = true;
  int epochs_stage1 = 3;
  int epochs_stage2 = 5;
  std::uint64_t seed = 0;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  // Missing keys keep their defaults.
  static TrainConfig FromJson(const nlohmann::json& doc);
  static TrainConfig FromJson(const nlohmann::json& doc, TrainConfig defaults);
};

// Ablation switches: EV (expand vocabulary), TP (stage 1 on term pairs),
// PC (stage 2 on the parallel corpus), and the KL term per stage.
struct StagePlan {
  bool expand_vocab = true;
  bool stage1_term_pairs = true;
  bool stage2_parallel = true;
  bool sse_stage1 = true;
  bool sse_stage2 = true;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static StagePlan FromJson(const nlohmann::json& doc);
  static StagePlan FromJson(const nlohmann::json& doc, StagePlan defaults);

  static StagePlan RowA();  // untuned base
  static StagePlan RowB();  // PC only
  static StagePlan RowC();  // EV + TP + PC
  static StagePlan RowD();  // EV + TP + PC with the KL term in both stages
};

struct LossBreakdown {
  double ce = 0.0;
  double kl = 0.0;
  double total = 0.0;
};

// Value-level losses over a batch of predictions. targets[i] has one id per
// row of preds[i]; masked rows are skipped. Averages are per token.
double CeLossSingle(std::span<const PredictionDistribution> preds,
                    std::span<const std::vector<TokenId>> targets);
double KlBidirectional(std::span<const PredictionDistribution> p1,
                       std::span<const PredictionDistribution> p2);
double CeLossDual(std::span<const PredictionDistribution> p1,
                  std::span<const PredictionDistribution> p2,
                  std::span<const std::vector<TokenId>> targets);
LossBreakdown TotalLoss(std::span<const PredictionDistribution> p1,
                        std::span<const PredictionDistribution> p2,
                        std::span<const std::vector<TokenId>> targets, double alpha);

// Per-sequence objective evaluated from logits. Returns un-normalized sums:
// with two passes, ce_sum = 1/2 sum_t (-log p1 - log p2) and
// kl_sum = 1/2 sum_t (KL(p1||p2) + KL(p2||p1)); with one pass, ce_sum is the
// plain NLL and kl_sum = 0. When gradient outputs are given, they receive
// d(grad_scale * (ce_sum + alpha * kl_sum)) / d(logits).
struct ObjectiveSums {
  double ce_sum = 0.0;
  double kl_sum = 0.0;
};
ObjectiveSums SequenceObjective(const Matrix& logits1, const Matrix* logits2,
                                std::span<const TokenId> targets, double alpha,
                                double grad_scale, Matrix* dlogits1, Matrix* dlogits2);

// Model-ready token sequences for one example.
struct EncodedExample {
  std::vector<TokenId> src;      // tokens + eos
  std::vector<TokenId> tgt_in;   // bos + tokens
  std::vector<TokenId> tgt_out;  // tokens + eos
};
// Sequences are truncated so every part fits in max_seq_len.
EncodedExample EncodeExample(const Tokenizer& tok, std::string_view source,
                             std::string_view target, int max_seq_len);
std::vector<TokenId> EncodeSource(const Tokenizer& tok, std::string_view source, int max_seq_len);

// Loss of one batch with dropout rate `dropout_rate`; `use_sse` runs two
// passes per example with dropout sub-seeds 2s and 2s+1, where
// s = MixSeed(step_seed, index). Gradients (when non-null) accumulate the
// derivative of the total.
LossBreakdown BatchObjective(const ModelParameters& params,
                             std::span<const EncodedExample* const> batch, double dropout_rate,
                             double alpha, bool use_sse, std::uint64_t step_seed,
                             Gradients* grads);

struct AdamState {
  std::vector<Matrix> m;
  std::vector<Matrix> v;
  std::int64_t step = 0;
};

// Bias-corrected Adam with a constant learning rate. Throws kNumeric naming
// the first tensor with a non-finite gradient, before touching anything.
void AdamStep(ModelParameters& params, const Gradients& grads, AdamState& state,
              const TrainConfig& config);

struct StepLog {
  std::string stage;
  std::int64_t step = 0;
  LossBreakdown loss;
  double lr = 0.0;

  nlohmann::ordered_json ToJson() const;
};

struct StageOptions {
  std::string name;
  int epochs = 1;
  bool use_sse = false;
  std::uint64_t stream = 0;  // separates RNG streams of different stages
};

struct StageReport {
  std::string name;
  int epochs = 0;
  bool use_sse = false;
  std::size_t examples = 0;
  std::size_t steps = 0;
  LossBreakdown first;
  LossBreakdown last;
  std::vector<StepLog> log;

  nlohmann::ordered_json Summary() const;
};

// epochs x batches of Adam steps; the batch order of each epoch is a seeded
// permutation. Deterministic for a fixed config.
StageReport RunStage(ModelParameters& params, const Tokenizer& tok, const Corpus& corpus,
                     const TrainConfig& config, const StageOptions& options);

struct PipelineOutcome {
  ModelParameters model;
  Tokenizer tokenizer;
  std::vector<StageReport> stages;
  nlohmann::ordered_json report;
};

// Optional vocabulary expansion (characters of the term pairs and parallel
// corpus, embeddings grown with mean-init), then stage 1 on term pairs and
// stage 2 on the parallel corpus, as switched by `plan`. `on_stage_end`, if
// set, sees the model after each stage that ran.
using StageHook =
    std::function<void(const StageReport&, const ModelParameters&, const Tokenizer&)>;
PipelineOutcome RunG2stPipeline(const ModelParameters& base, const Tokenizer& base_tokenizer,
                                std::span<const TermPair> term_pairs,
                                const Corpus& parallel_train, const StagePlan& plan,
                                const TrainConfig& config, const StageHook& on_stage_end = {});

}  // namespace g2st

#endif  // G2ST_TRAINING_HPP_
