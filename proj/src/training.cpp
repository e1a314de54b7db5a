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

#include "g2st/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "g2st/common.hpp"

namespace g2st {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

void CheckBatchShapes(std::span<const PredictionDistribution> preds,
                      std::span<const std::vector<TokenId>> targets) {
  if (preds.size() != targets.size()) {
    throw Error(ErrorCode::kInvalidArgument, "predictions and targets differ in batch size");
  }
  for (std::size_t i = 0; i < preds.size(); ++i) {
    if (preds[i].rows() != targets[i].size() || preds[i].mask.size() != preds[i].rows()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "targets do not align with prediction rows in example " + std::to_string(i));
    }
    for (TokenId y : targets[i]) {
      if (y < 0 || y >= preds[i].probs.cols()) {
        throw Error(ErrorCode::kOutOfRange, "target id " + std::to_string(y) + " out of range");
      }
    }
  }
}

double SafeLog(double p) { return std::log(std::max(p, kProbFloor)); }

template <typename T>
T ReadOr(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

void TrainConfig::Validate() const {
  std::string problems;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) problems += std::string(problems.empty() ? "" : "; ") + msg;
  };
  check(batch_size >= 1, "batch_size must be >= 1");
  check(learning_rate > 0.0, "learning_rate must be positive");
  check(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
  check(alpha >= 0.0, "alpha must be >= 0");
  check(epochs_stage1 >= 1 && epochs_stage2 >= 1, "epoch counts must be >= 1");
  check(adam_beta1 >= 0.0 && adam_beta1 < 1.0 && adam_beta2 >= 0.0 && adam_beta2 < 1.0,
        "adam betas must lie in [0, 1)");
  check(adam_eps > 0.0, "adam_eps must be positive");
  if (!problems.empty()) throw Error(ErrorCode::kConfig, "invalid train config: " + problems);
}

ordered_json TrainConfig::ToJson() const {
  return ordered_json{{"batch_size", batch_size},       {"learning_rate", learning_rate},
                      {"dropout_rate", dropout_rate},   {"alpha", alpha},
                      {"sse_enabled", sse_enabled},     {"epochs_stage1", epochs_stage1},
                      {"epochs_stage2", epochs_stage2}, {"seed", seed},
                      {"adam_beta1", adam_beta1},       {"adam_beta2", adam_beta2},
                      {"adam_eps", adam_eps}};
}

TrainConfig TrainConfig::FromJson(const json& doc) { return FromJson(doc, TrainConfig{}); }

TrainConfig TrainConfig::FromJson(const json& doc, TrainConfig c) {
  try {
    c.batch_size = ReadOr(doc, "batch_size", c.batch_size);
    c.learning_rate = ReadOr(doc, "learning_rate", c.learning_rate);
    c.dropout_rate = ReadOr(doc, "dropout_rate", c.dropout_rate);
    c.alpha = ReadOr(doc, "alpha", c.alpha);
    c.sse_enabled = ReadOr(doc, "sse_enabled", c.sse_enabled);
    c.epochs_stage1 = ReadOr(doc, "epochs_stage1", c.epochs_stage1);
    c.epochs_stage2 = ReadOr(doc, "epochs_stage2", c.epochs_stage2);
    c.seed = ReadOr(doc, "seed", c.seed);
    c.adam_beta1 = ReadOr(doc, "adam_beta1", c.adam_beta1);
    c.adam_beta2 = ReadOr(doc, "adam_beta2", c.adam_beta2);
    c.adam_eps = ReadOr(doc, "adam_eps", c.adam_eps);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid train config: ") + e.what());
  }
  return c;
}

void StagePlan::Validate() const {
  if (sse_stage1 && !stage1_term_pairs) {
    throw Error(ErrorCode::kConfig, "plan enables the KL term in stage 1 without stage 1");
  }
  if (sse_stage2 && !stage2_parallel) {
    throw Error(ErrorCode::kConfig, "plan enables the KL term in stage 2 without stage 2");
  }
}

ordered_json StagePlan::ToJson() const {
  return ordered_json{{"expand_vocab", expand_vocab},
                      {"stage1_term_pairs", stage1_term_pairs},
                      {"stage2_parallel", stage2_parallel},
                      {"sse_stage1", sse_stage1},
                      {"sse_stage2", sse_stage2}};
}

StagePlan StagePlan::FromJson(const json& doc) { return FromJson(doc, StagePlan{}); }

StagePlan StagePlan::FromJson(const json& doc, StagePlan p) {
  try {
    p.expand_vocab = ReadOr(doc, "expand_vocab", p.expand_vocab);
    p.stage1_term_pairs = ReadOr(doc, "stage1_term_pairs", p.stage1_term_pairs);
    p.stage2_parallel = ReadOr(doc, "stage2_parallel", p.stage2_parallel);
    p.sse_stage1 = ReadOr(doc, "sse_stage1", p.sse_stage1);
    p.sse_stage2 = ReadOr(doc, "sse_stage2", p.sse_stage2);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid stage plan: ") + e.what());
  }
  return p;
}

StagePlan StagePlan::RowA() { return {false, false, false, false, false}; }
StagePlan StagePlan::RowB() { return {false, false, true, false, false}; }
StagePlan StagePlan::RowC() { return {true, true, true, false, false}; }
StagePlan StagePlan::RowD() { return {true, true, true, true, true}; }

double CeLossSingle(std::span<const PredictionDistribution> preds,
                    std::span<const std::vector<TokenId>> targets) {
  CheckBatchShapes(preds, targets);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t t = 0; t < preds[i].rows(); ++t) {
      if (!preds[i].mask[t]) continue;
      sum -= SafeLog(preds[i].probs(static_cast<Eigen::Index>(t), targets[i][t]));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "no unmasked target positions");
  return sum / static_cast<double>(count);
}

double KlBidirectional(std::span<const PredictionDistribution> p1,
                       std::span<const PredictionDistribution> p2) {
  if (p1.size() != p2.size()) {
    throw Error(ErrorCode::kInvalidArgument, "KL inputs differ in batch size");
  }
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    const auto& a = p1[i];
    const auto& b = p2[i];
    if (a.probs.rows() != b.probs.rows() || a.probs.cols() != b.probs.cols() || a.mask != b.mask) {
      throw Error(ErrorCode::kInvalidArgument,
                  "KL inputs differ in shape or mask in example " + std::to_string(i));
    }
    for (Eigen::Index t = 0; t < a.probs.rows(); ++t) {
      if (!a.mask[static_cast<std::size_t>(t)]) continue;
      double forward = 0.0;
      double backward = 0.0;
      for (Eigen::Index v = 0; v < a.probs.cols(); ++v) {
        const double p = a.probs(t, v);
        const double q = b.probs(t, v);
        const double lp = SafeLog(p);
        const double lq = SafeLog(q);
        forward += p * (lp - lq);
        backward += q * (lq - lp);
      }
      sum += 0.5 * (forward + backward);
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "no unmasked positions");
  return sum / static_cast<double>(count);
}

double CeLossDual(std::span<const PredictionDistribution> p1,
                  std::span<const PredictionDistribution> p2,
                  std::span<const std::vector<TokenId>> targets) {
  CheckBatchShapes(p1, targets);
  CheckBatchShapes(p2, targets);
  double sum1 = 0.0;
  double sum2 = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < p1.size(); ++i) {
    if (p1[i].mask != p2[i].mask) {
      throw Error(ErrorCode::kInvalidArgument, "dual predictions differ in mask");
    }
    for (std::size_t t = 0; t < p1[i].rows(); ++t) {
      if (!p1[i].mask[t]) continue;
      const auto row = static_cast<Eigen::Index>(t);
      sum1 -= SafeLog(p1[i].probs(row, targets[i][t]));
      sum2 -= SafeLog(p2[i].probs(row, targets[i][t]));
      ++count;
    }
  }
  if (count == 0) throw Error(ErrorCode::kInvalidArgument, "no unmasked target positions");
  const auto n = static_cast<double>(count);
  return 0.5 * (sum1 / n + sum2 / n);
}

LossBreakdown TotalLoss(std::span<const PredictionDistribution> p1,
                        std::span<const PredictionDistribution> p2,
                        std::span<const std::vector<TokenId>> targets, double alpha) {
  if (!(alpha >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "alpha must be >= 0");
  LossBreakdown out;
  out.ce = CeLossDual(p1, p2, targets);
  out.kl = KlBidirectional(p1, p2);
  out.total = out.ce + alpha * out.kl;
  return out;
}

ObjectiveSums SequenceObjective(const Matrix& logits1, const Matrix* logits2,
                                std::span<const TokenId> targets, double alpha,
                                double grad_scale, Matrix* dlogits1, Matrix* dlogits2) {
  if (static_cast<std::size_t>(logits1.rows()) != targets.size() ||
      (logits2 && (logits2->rows() != logits1.rows() || logits2->cols() != logits1.cols()))) {
    throw Error(ErrorCode::kInvalidArgument, "objective inputs do not align");
  }
  const double log_floor = std::log(kProbFloor);
  ObjectiveSums sums;
  const Matrix lp1 = LogSoftmaxRows(logits1);
  const Matrix p1 = lp1.array().exp();
  if (dlogits1) dlogits1->setZero(logits1.rows(), logits1.cols());

  if (!logits2) {
    for (Eigen::Index t = 0; t < lp1.rows(); ++t) {
      const TokenId y = targets[static_cast<std::size_t>(t)];
      sums.ce_sum -= std::max(lp1(t, y), log_floor);
      if (dlogits1) {
        dlogits1->row(t) = grad_scale * p1.row(t);
        (*dlogits1)(t, y) -= grad_scale;
      }
    }
    return sums;
  }

  const Matrix lp2 = LogSoftmaxRows(*logits2);
  const Matrix p2 = lp2.array().exp();
  if (dlogits2) dlogits2->setZero(logits2->rows(), logits2->cols());
  const double ce_w = 0.5 * grad_scale;
  const double kl_w = 0.5 * alpha * grad_scale;
  for (Eigen::Index t = 0; t < lp1.rows(); ++t) {
    const TokenId y = targets[static_cast<std::size_t>(t)];
    sums.ce_sum -= 0.5 * (std::max(lp1(t, y), log_floor) + std::max(lp2(t, y), log_floor));
    const Eigen::RowVectorXd diff = lp1.row(t) - lp2.row(t);
    const double kl12 = p1.row(t).dot(diff);
    const double kl21 = -p2.row(t).dot(diff);
    sums.kl_sum += 0.5 * (kl12 + kl21);
    if (dlogits1) {
      dlogits1->row(t) = ce_w * p1.row(t) +
                         kl_w * (p1.row(t).cwiseProduct(diff) + p1.row(t) - p2.row(t) - kl12 * p1.row(t));
      (*dlogits1)(t, y) -= ce_w;
    }
    if (dlogits2) {
      dlogits2->row(t) = ce_w * p2.row(t) +
                         kl_w * (-p2.row(t).cwiseProduct(diff) + p2.row(t) - p1.row(t) - kl21 * p2.row(t));
      (*dlogits2)(t, y) -= ce_w;
    }
  }
  return sums;
}

std::vector<TokenId> EncodeSource(const Tokenizer& tok, std::string_view source, int max_seq_len) {
  std::vector<TokenId> src = tok.Encode(source);
  if (src.size() > static_cast<std::size_t>(max_seq_len - 1)) {
    src.resize(static_cast<std::size_t>(max_seq_len - 1));
  }
  src.push_back(Tokenizer::kEos);
  return src;
}

EncodedExample EncodeExample(const Tokenizer& tok, std::string_view source,
                             std::string_view target, int max_seq_len) {
  EncodedExample ex;
  ex.src = EncodeSource(tok, source, max_seq_len);
  std::vector<TokenId> y = tok.Encode(target);
  if (y.size() > static_cast<std::size_t>(max_seq_len - 1)) {
    y.resize(static_cast<std::size_t>(max_seq_len - 1));
  }
  ex.tgt_in.reserve(y.size() + 1);
  ex.tgt_in.push_back(Tokenizer::kBos);
  ex.tgt_in.insert(ex.tgt_in.end(), y.begin(), y.end());
  ex.tgt_out = std::move(y);
  ex.tgt_out.push_back(Tokenizer::kEos);
  return ex;
}

LossBreakdown BatchObjective(const ModelParameters& params,
                             std::span<const EncodedExample* const> batch, double dropout_rate,
                             double alpha, bool use_sse, std::uint64_t step_seed,
                             Gradients* grads) {
  std::size_t tokens = 0;
  for (const auto* ex : batch) tokens += ex->tgt_out.size();
  if (tokens == 0) throw Error(ErrorCode::kInvalidArgument, "empty batch");
  const double scale = 1.0 / static_cast<double>(tokens);
  const bool dropout = dropout_rate > 0.0;

  ObjectiveSums total;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const EncodedExample& ex = *batch[i];
    const std::uint64_t s = MixSeed(step_seed, i);
    Tape tape(grads != nullptr);
    BoundModel model(tape, params, grads);
    DropoutRng rng1(s * 2);
    DropoutRng rng2(s * 2 + 1);
    const auto z1 = model.Logits(ex.src, ex.tgt_in, dropout_rate, dropout ? &rng1 : nullptr);
    std::optional<Tape::Id> z2;
    if (use_sse) z2 = model.Logits(ex.src, ex.tgt_in, dropout_rate, dropout ? &rng2 : nullptr);

    Matrix d1;
    Matrix d2;
    const auto sums = SequenceObjective(tape.value(z1), z2 ? &tape.value(*z2) : nullptr,
                                        ex.tgt_out, alpha, scale, grads ? &d1 : nullptr,
                                        grads && z2 ? &d2 : nullptr);
    total.ce_sum += sums.ce_sum;
    total.kl_sum += sums.kl_sum;
    if (grads) {
      std::vector<std::pair<Tape::Id, Matrix>> seeds;
      seeds.emplace_back(z1, std::move(d1));
      if (z2) seeds.emplace_back(*z2, std::move(d2));
      tape.Backward(seeds);
    }
  }
  LossBreakdown out;
  out.ce = total.ce_sum * scale;
  out.kl = total.kl_sum * scale;
  out.total = out.ce + alpha * out.kl;
  return out;
}

void AdamStep(ModelParameters& params, const Gradients& grads, AdamState& state,
              const TrainConfig& config) {
  auto& tensors = params.mutable_tensors();
  if (grads.size() != tensors.size()) {
    throw Error(ErrorCode::kInvalidArgument, "gradient count does not match parameters");
  }
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    if (grads[i].rows() != tensors[i].value.rows() || grads[i].cols() != tensors[i].value.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "gradient shape mismatch for " + tensors[i].name);
    }
    if (!grads[i].allFinite()) {
      throw Error(ErrorCode::kNumeric, "non-finite gradient in tensor " + tensors[i].name);
    }
  }
  if (state.m.size() != tensors.size()) {
    state.m.clear();
    state.v.clear();
    for (const auto& t : tensors) {
      state.m.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
      state.v.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
    }
  }
  ++state.step;
  const double b1 = config.adam_beta1;
  const double b2 = config.adam_beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    auto m = state.m[i].array();
    auto v = state.v[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    tensors[i].value.array() -=
        config.learning_rate * (m / c1) / ((v / c2).sqrt() + config.adam_eps);
    RoundToFloat(tensors[i].value);
  }
}

ordered_json StepLog::ToJson() const {
  return ordered_json{{"stage", stage}, {"step", step},       {"ce", loss.ce},
                      {"kl", loss.kl},  {"total", loss.total}, {"lr", lr}};
}

ordered_json StageReport::Summary() const {
  return ordered_json{{"name", name},
                      {"epochs", epochs},
                      {"sse", use_sse},
                      {"examples", examples},
                      {"steps", steps},
                      {"first", {{"ce", first.ce}, {"kl", first.kl}, {"total", first.total}}},
                      {"final", {{"ce", last.ce}, {"kl", last.kl}, {"total", last.total}}}};
}

StageReport RunStage(ModelParameters& params, const Tokenizer& tok, const Corpus& corpus,
                     const TrainConfig& config, const StageOptions& options) {
  config.Validate();
  if (options.epochs < 1) throw Error(ErrorCode::kInvalidArgument, "stage needs >= 1 epoch");
  if (tok.vocab_size() > static_cast<std::size_t>(params.config().vocab_size)) {
    throw Error(ErrorCode::kInvalidArgument,
                "tokenizer vocabulary (" + std::to_string(tok.vocab_size()) +
                    ") exceeds model vocabulary (" + std::to_string(params.config().vocab_size) + ")");
  }
  std::vector<EncodedExample> encoded;
  encoded.reserve(corpus.size());
  for (const auto& ex : corpus.examples()) {
    encoded.push_back(EncodeExample(tok, ex.source, ex.target, params.config().max_seq_len));
  }

  StageReport report;
  report.name = options.name;
  report.epochs = options.epochs;
  report.use_sse = options.use_sse;
  report.examples = corpus.size();
  const double alpha = options.use_sse ? config.alpha : 0.0;
  const std::uint64_t stage_seed = MixSeed(config.seed, 0x5747 + options.stream);

  AdamState adam;
  std::vector<std::size_t> order(encoded.size());
  std::vector<const EncodedExample*> batch;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(MixSeed(stage_seed, static_cast<std::uint64_t>(epoch)));
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[static_cast<std::size_t>(shuffle_rng() % i)]);
    }
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      batch.clear();
      for (std::size_t k = start; k < end; ++k) batch.push_back(&encoded[order[k]]);
      Gradients grads = ZeroGradients(params);
      const auto step_seed = MixSeed(stage_seed ^ 0xD20F, report.steps);
      const LossBreakdown loss = BatchObjective(params, batch, config.dropout_rate, alpha,
                                                options.use_sse, step_seed, &grads);
      AdamStep(params, grads, adam, config);
      if (report.steps == 0) report.first = loss;
      report.last = loss;
      report.log.push_back({options.name, static_cast<std::int64_t>(report.steps), loss,
                            config.learning_rate});
      ++report.steps;
    }
  }
  return report;
}

PipelineOutcome RunG2stPipeline(const ModelParameters& base, const Tokenizer& base_tokenizer,
                                std::span<const TermPair> term_pairs,
                                const Corpus& parallel_train, const StagePlan& plan,
                                const TrainConfig& config, const StageHook& on_stage_end) {
  plan.Validate();
  config.Validate();
  PipelineOutcome out{base, base_tokenizer, {}, {}};
  ordered_json report;
  report["plan"] = plan.ToJson();
  report["train_config"] = config.ToJson();
  report["vocab_size_before"] = base_tokenizer.vocab_size();

  std::size_t added = 0;
  if (plan.expand_vocab) {
    std::vector<std::string> texts;
    for (const auto& p : term_pairs) {
      texts.push_back(p.source);
      texts.push_back(p.target);
    }
    for (const auto& ex : parallel_train.examples()) {
      texts.push_back(ex.source);
      texts.push_back(ex.target);
    }
    out.tokenizer = base_tokenizer.Expand(CharacterSet(texts));
    added = out.tokenizer.vocab_size() - base_tokenizer.vocab_size();
    out.model = ResizeEmbeddings(
        out.model, std::max<int>(out.model.config().vocab_size, static_cast<int>(out.tokenizer.vocab_size())),
        EmbeddingInit::kMean, MixSeed(config.seed, 0xE7));
  }
  report["added_characters"] = added;
  report["vocab_size_after"] = out.tokenizer.vocab_size();

  if (plan.stage1_term_pairs) {
    const Corpus terms = TermPairsAsCorpus(term_pairs);
    out.stages.push_back(RunStage(out.model, out.tokenizer, terms, config,
                                  {"stage1", config.epochs_stage1, plan.sse_stage1 && config.sse_enabled, 1}));
    if (on_stage_end) on_stage_end(out.stages.back(), out.model, out.tokenizer);
  }
  if (plan.stage2_parallel) {
    out.stages.push_back(RunStage(out.model, out.tokenizer, parallel_train, config,
                                  {"stage2", config.epochs_stage2, plan.sse_stage2 && config.sse_enabled, 2}));
    if (on_stage_end) on_stage_end(out.stages.back(), out.model, out.tokenizer);
  }
  ordered_json stages = ordered_json::array();
  for (const auto& s : out.stages) stages.push_back(s.Summary());
  report["stages"] = std::move(stages);
  out.report = std::move(report);
  return out;
}

}  // namespace g2st
