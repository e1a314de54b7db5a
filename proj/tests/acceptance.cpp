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

// Acceptance checks for the toolkit. Prints one PASS/FAIL line per
// criterion and exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "g2st/common.hpp"
#include "g2st/corpus.hpp"
#include "g2st/metrics.hpp"
#include "g2st/model.hpp"
#include "g2st/runner.hpp"
#include "g2st/tokenizer.hpp"
#include "g2st/training.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using g2st::Matrix;
using g2st::PredictionDistribution;
using g2st::TokenId;
using nlohmann::json;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), fmt, args...);
  return buf;
}

// --- shared helpers --------------------------------------------------------

PredictionDistribution RandomDistribution(std::mt19937_64& rng, int rows, int vocab) {
  std::normal_distribution<double> normal(0.0, 2.0);
  PredictionDistribution d;
  d.probs.resize(rows, vocab);
  for (int r = 0; r < rows; ++r) {
    double z = 0.0;
    for (int c = 0; c < vocab; ++c) z += (d.probs(r, c) = std::exp(normal(rng)));
    d.probs.row(r) /= z;
  }
  d.mask.assign(static_cast<std::size_t>(rows), 1);
  return d;
}

// Direct per-token definitions, independent of the library code.
double KlOracle(const Matrix& p, const Matrix& q) {
  double s = 0.0;
  for (Eigen::Index r = 0; r < p.rows(); ++r) {
    for (Eigen::Index c = 0; c < p.cols(); ++c) s += p(r, c) * std::log(p(r, c) / q(r, c));
  }
  return s / static_cast<double>(p.rows());
}

double CeOracle(const Matrix& p, const std::vector<TokenId>& y) {
  double s = 0.0;
  for (std::size_t t = 0; t < y.size(); ++t) s -= std::log(p(static_cast<Eigen::Index>(t), y[t]));
  return s / static_cast<double>(y.size());
}

std::size_t LcsBruteForce(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::size_t best = 0;
  for (std::size_t mask = 0; mask < (std::size_t{1} << a.size()); ++mask) {
    const auto len = static_cast<std::size_t>(__builtin_popcountll(mask));
    if (len <= best) continue;
    std::size_t j = 0;
    bool ok = true;
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      if (!(mask >> i & 1)) continue;
      while (j < b.size() && b[j] != a[i]) ++j;
      ok = j < b.size();
      ++j;
    }
    if (ok) best = len;
  }
  return best;
}

g2st::ModelConfig SmallModel(int vocab, int d_model, double dropout) {
  g2st::ModelConfig c;
  c.d_model = d_model;
  c.n_heads = 4;
  c.n_layers_enc = 1;
  c.n_layers_dec = 1;
  c.ffn_dim = 2 * d_model;
  c.dropout_rate = dropout;
  c.max_seq_len = 32;
  c.vocab_size = vocab;
  return c;
}

g2st::Tokenizer BothSidesTokenizer(const g2st::Corpus& corpus, std::size_t size) {
  std::vector<std::string> texts = corpus.sources();
  for (auto& t : corpus.targets()) texts.push_back(t);
  return g2st::Tokenizer::Train(texts, size);
}

// --- criteria ----------------------------------------------------------------

Outcome LossIdentities() {
  std::mt19937_64 rng(101);
  double worst_sym = 0.0;
  double min_kl = 1e300;
  double worst_self = 0.0;
  double worst_oracle = 0.0;
  double worst_dual = 0.0;
  double worst_alpha0 = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const int vocab = 2 + static_cast<int>(rng() % 63);
    const int rows = 1 + static_cast<int>(rng() % 6);
    const std::vector<PredictionDistribution> p1{RandomDistribution(rng, rows, vocab)};
    const std::vector<PredictionDistribution> p2{RandomDistribution(rng, rows, vocab)};
    std::vector<std::vector<TokenId>> y(1);
    for (int t = 0; t < rows; ++t) y[0].push_back(static_cast<TokenId>(rng() % static_cast<std::uint64_t>(vocab)));

    const double kl12 = g2st::KlBidirectional(p1, p2);
    const double kl21 = g2st::KlBidirectional(p2, p1);
    worst_sym = std::max(worst_sym, std::abs(kl12 - kl21));
    min_kl = std::min(min_kl, kl12);
    worst_self = std::max(worst_self, std::abs(g2st::KlBidirectional(p1, p1)));
    const double oracle = 0.5 * (KlOracle(p1[0].probs, p2[0].probs) + KlOracle(p2[0].probs, p1[0].probs));
    worst_oracle = std::max(worst_oracle, std::abs(kl12 - oracle) / std::max(1.0, oracle));

    const double ce1 = g2st::CeLossSingle(p1, y);
    const double ce2 = g2st::CeLossSingle(p2, y);
    const double dual = g2st::CeLossDual(p1, p2, y);
    worst_dual = std::max(worst_dual, std::abs(dual - 0.5 * (ce1 + ce2)));
    worst_oracle = std::max(worst_oracle, std::abs(ce1 - CeOracle(p1[0].probs, y[0])));
    const auto total = g2st::TotalLoss(p1, p2, y, 0.0);
    worst_alpha0 = std::max(worst_alpha0, std::abs(total.total - dual));
  }
  const bool pass = worst_sym < 1e-12 && min_kl >= 0.0 && worst_self < 1e-10 && worst_dual < 1e-12 &&
                    worst_alpha0 == 0.0 && worst_oracle < 1e-12;
  return {pass, Format("|kl12-kl21|max=%.1e min kl=%.3g |kl(p,p)|max=%.1e |dual-mean|max=%.1e "
                       "alpha0 gap=%.1e oracle gap=%.1e",
                       worst_sym, min_kl, worst_self, worst_dual, worst_alpha0, worst_oracle)};
}

Outcome DropoutZeroCollapse() {
  std::mt19937_64 rng(202);
  const auto model = g2st::InitModel(SmallModel(40, 16, 0.0), 1);
  bool identical = true;
  for (int i = 0; i < 20; ++i) {
    std::vector<TokenId> src(4 + rng() % 8);
    std::vector<TokenId> tgt(2 + rng() % 8);
    for (auto& t : src) t = static_cast<TokenId>(4 + rng() % 36);
    for (auto& t : tgt) t = static_cast<TokenId>(4 + rng() % 36);
    const auto [a, b] = g2st::DualForward(model, src, tgt, rng());
    identical = identical && a.probs == b.probs;
  }

  const auto spec = g2st::SynthesizeLexicon(20, 20, 2);
  const auto corpus = g2st::GenerateSyntheticCorpus(spec, 25);
  const auto tok = BothSidesTokenizer(corpus, 120);
  auto params = g2st::InitModel(SmallModel(static_cast<int>(tok.vocab_size()), 16, 0.0), 2);
  g2st::TrainConfig cfg;
  cfg.batch_size = 5;
  cfg.learning_rate = 1e-3;
  cfg.dropout_rate = 0.0;
  const auto report = g2st::RunStage(params, tok, corpus, cfg, {"stage2", 10, true, 2});
  std::size_t nonzero = 0;
  for (const auto& step : report.log) nonzero += step.loss.kl != 0.0;
  const bool pass = identical && report.steps == 50 && nonzero == 0;
  return {pass, Format("dual passes identical=%s, %zu steps, %zu with kl != 0", identical ? "yes" : "no",
                       report.steps, nonzero)};
}

Outcome GradientCheck() {
  auto params = g2st::InitModel(SmallModel(50, 16, 0.0), 31);
  std::mt19937_64 rng(303);
  std::vector<g2st::EncodedExample> data(3);
  for (auto& ex : data) {
    for (int i = 0; i < 6; ++i) ex.src.push_back(static_cast<TokenId>(4 + rng() % 46));
    ex.src.push_back(g2st::Tokenizer::kEos);
    ex.tgt_in = {g2st::Tokenizer::kBos};
    for (int i = 0; i < 5; ++i) {
      const auto t = static_cast<TokenId>(4 + rng() % 46);
      ex.tgt_in.push_back(t);
      ex.tgt_out.push_back(t);
    }
    ex.tgt_out.push_back(g2st::Tokenizer::kEos);
  }
  const std::vector<const g2st::EncodedExample*> batch = {&data[0], &data[1], &data[2]};
  const double alpha = 0.05;
  auto grads = g2st::ZeroGradients(params);
  g2st::BatchObjective(params, batch, 0.0, alpha, true, 7, &grads);
  auto loss = [&] { return g2st::BatchObjective(params, batch, 0.0, alpha, true, 7, nullptr).total; };

  const double h = 1e-4;
  std::size_t checked = 0;
  std::size_t tiny = 0;
  double worst = 0.0;
  auto& tensors = params.mutable_tensors();
  // Round-robin over tensors so every kind of parameter is covered.
  for (std::size_t round = 0; checked < 240; ++round) {
    const std::size_t ti = round % tensors.size();
    Matrix& w = tensors[ti].value;
    const auto idx = static_cast<Eigen::Index>(rng() % static_cast<std::uint64_t>(w.size()));
    const double orig = w.data()[idx];
    w.data()[idx] = orig + h;
    const double up = loss();
    w.data()[idx] = orig - h;
    const double down = loss();
    w.data()[idx] = orig;
    const double fd = (up - down) / (2.0 * h);
    const double an = grads[ti].data()[idx];
    if (std::abs(fd) < 1e-7 && std::abs(an) < 1e-7) {
      ++tiny;  // both vanish; the relative error is not meaningful
      if (tiny > 1000) break;
      continue;
    }
    worst = std::max(worst, std::abs(fd - an) / std::max(std::abs(fd), std::abs(an)));
    ++checked;
  }
  return {checked >= 200 && worst < 1e-3,
          Format("%zu parameters, max relative error %.2e (%zu skipped with |g| < 1e-7)", checked,
                 worst, tiny)};
}

Outcome MetricOracles() {
  std::mt19937_64 rng(404);
  std::size_t mismatches = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<std::string> a(rng() % 9);
    std::vector<std::string> b(rng() % 9);
    for (auto& s : a) s = std::string(1, static_cast<char>('a' + rng() % 4));
    for (auto& s : b) s = std::string(1, static_cast<char>('a' + rng() % 4));
    const auto lcs = LcsBruteForce(a, b);
    const double p = a.empty() ? 0.0 : static_cast<double>(lcs) / static_cast<double>(a.size());
    const double r = b.empty() ? 0.0 : static_cast<double>(lcs) / static_cast<double>(b.size());
    const double f = p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
    const auto got = g2st::RougeLTokens(a, b);
    if (g2st::LcsLength(a, b) != lcs || got.f1 != f || got.precision != p || got.recall != r) {
      ++mismatches;
    }
  }
  auto dp4 = [](double x) { return std::round(x * 1e4) / 1e4; };
  const double rl = g2st::RougeL("the cat sat", "the dog ate a cat").f1;
  const double r2 = g2st::RougeN("the cat sat", "the cat is on mat", 2).f1;
  const auto bleu = g2st::CorpusBleu(std::vector<std::string>{"the cat"},
                                     std::vector<std::string>{"the cat sat"});
  const bool worked = dp4(rl) == dp4(0.5) && dp4(r2) == dp4(1.0 / 3.0) &&
                      dp4(bleu.brevity_penalty) == dp4(std::exp(-0.5));
  const std::vector<std::string> texts{"Red Cotton Shirt , large", "blue linen tent", "猫 帐篷 一件代发"};
  const auto self = g2st::EvaluateCorpus(texts, texts);
  const bool identity = std::abs(self.bleu.score - 100.0) < 1e-9 && std::abs(self.rouge1 - 100.0) < 1e-9 &&
                        std::abs(self.rouge2 - 100.0) < 1e-9 && std::abs(self.rougeL - 100.0) < 1e-9;
  return {mismatches == 0 && worked && identity,
          Format("lcs mismatches %zu/1000; rougeL %.4f rouge2 %.4f bp %.4f; identity %.2f %.2f %.2f %.2f",
                 mismatches, rl, r2, bleu.brevity_penalty, self.bleu.score, self.rouge1, self.rouge2,
                 self.rougeL)};
}

Outcome TokenizerExpansion() {
  const auto spec = g2st::SynthesizeLexicon(200, 150, 11);
  const auto domain = g2st::GenerateSyntheticCorpus(spec, 500);
  const auto general = g2st::GenerateSyntheticCorpus(g2st::GeneralDomainSpec(spec), 500);
  const auto tok = BothSidesTokenizer(general, 400);
  std::vector<std::string> texts = domain.sources();
  for (auto& t : domain.targets()) texts.push_back(t);
  const double before = tok.Oov(texts).rate;
  const auto expanded = tok.Expand(g2st::CharacterSet(texts));
  const double after = expanded.Oov(texts).rate;

  bool ids_kept = expanded.vocab_size() > tok.vocab_size();
  for (std::size_t id = 0; id < tok.vocab_size(); ++id) {
    const auto& piece = tok.token(static_cast<TokenId>(id));
    ids_kept = ids_kept && expanded.token(static_cast<TokenId>(id)) == piece;
    if (id >= g2st::Tokenizer::kNumSpecials) {
      ids_kept = ids_kept && expanded.Find(piece) == static_cast<TokenId>(id);
    }
  }
  for (const auto& s : general.sources()) ids_kept = ids_kept && expanded.Encode(s) == tok.Encode(s);

  const auto model = g2st::InitModel(SmallModel(static_cast<int>(tok.vocab_size()), 16, 0.1), 5);
  const auto big = g2st::ResizeEmbeddings(model, static_cast<int>(expanded.vocab_size()),
                                          g2st::EmbeddingInit::kMean, 5);
  bool logits_exact = true;
  for (std::size_t i = 0; i < 20; ++i) {
    const auto src = g2st::EncodeSource(tok, general[i].source, 32);
    auto tgt = tok.Encode(general[i].target);
    tgt.insert(tgt.begin(), g2st::Tokenizer::kBos);
    tgt.resize(std::min<std::size_t>(tgt.size(), 32));
    const Matrix before_logits = g2st::ForwardLogits(model, src, tgt, {0, false});
    const Matrix after_logits = g2st::ForwardLogits(big, src, tgt, {0, false});
    logits_exact = logits_exact && after_logits.leftCols(before_logits.cols()) == before_logits;
  }
  return {after == 0.0 && before > 0.0 && ids_kept && logits_exact,
          Format("oov %.4f -> %.4f, vocab %zu -> %zu, ids unchanged=%s, old logits bit-exact=%s", before,
                 after, tok.vocab_size(), expanded.vocab_size(), ids_kept ? "yes" : "no",
                 logits_exact ? "yes" : "no")};
}

// Toy-scale ablation: one general-domain base model, rows A-D for 3 seeds.
Outcome AblationOrdering(const fs::path& work) {
  auto spec = g2st::SynthesizeLexicon(200, 150, 11);
  spec.term_probability = 0.5;
  const auto domain = g2st::GenerateSyntheticCorpus(spec, 2500);
  const auto general = g2st::GenerateSyntheticCorpus(g2st::GeneralDomainSpec(spec), 2000);
  g2st::SaveParallelCorpus(domain, work / "domain.jsonl");
  g2st::SaveParallelCorpus(general, work / "general.jsonl");
  g2st::SaveTermPairs(spec.term_lexicon, work / "terms.jsonl");

  g2st::RunConfig rc;
  rc.paths.parallel_corpus = work / "domain.jsonl";
  rc.paths.term_pairs = work / "terms.jsonl";
  rc.paths.general_corpus = work / "general.jsonl";
  rc.train_count = 2000;
  rc.model.d_model = 64;
  rc.model.n_heads = 4;
  rc.model.n_layers_enc = 1;
  rc.model.n_layers_dec = 1;
  rc.model.ffn_dim = 256;
  rc.model.max_seq_len = 48;
  rc.base.vocab_size = 500;
  rc.base.epochs = 10;
  rc.base.learning_rate = 2e-3;
  rc.base.batch_size = 32;
  rc.train.learning_rate = 1e-3;
  rc.train.batch_size = 32;
  rc.train.epochs_stage1 = 5;
  rc.train.epochs_stage2 = 8;

  const auto base = g2st::PretrainBaseModel(general, rc.model, rc.base, 12345);
  g2st::SaveCheckpoint(base.model, work / "base.ckpt", {});
  base.tokenizer.Save(work / "base_tokenizer.json");
  rc.paths.base_checkpoint = work / "base.ckpt";
  rc.paths.base_tokenizer = work / "base_tokenizer.json";

  std::vector<std::array<double, 4>> scores;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    rc.seed = seed;
    rc.train.seed = seed;
    rc.paths.output_dir = work / ("seed" + std::to_string(seed));
    const auto summary = g2st::RunAblation(rc);
    std::array<double, 4> row{};
    for (std::size_t r = 0; r < 4; ++r) row[r] = summary["rows"][r]["sacrebleu"].get<double>();
    scores.push_back(row);
    std::printf("  seed %llu: A %.2f B %.2f C %.2f D %.2f\n", static_cast<unsigned long long>(seed), row[0],
                row[1], row[2], row[3]);
    std::fflush(stdout);
  }
  std::array<double, 4> mean{};
  int d_beats_b = 0;
  for (const auto& row : scores) {
    for (std::size_t r = 0; r < 4; ++r) mean[r] += row[r] / static_cast<double>(scores.size());
    d_beats_b += row[3] > row[1];
  }
  const bool pass = mean[0] < mean[1] && mean[1] <= mean[2] && mean[2] <= mean[3] && mean[3] > mean[1] &&
                    d_beats_b >= 2;
  return {pass, Format("mean SacreBLEU A %.2f B %.2f C %.2f D %.2f; D > B in %d/3 seeds", mean[0], mean[1],
                       mean[2], mean[3], d_beats_b)};
}

Outcome Overfit() {
  const auto spec = g2st::SynthesizeLexicon(20, 20, 7);
  const auto corpus = g2st::GenerateSyntheticCorpus(spec, 10);
  const auto tok = BothSidesTokenizer(corpus, 150);
  auto model = g2st::InitModel(SmallModel(static_cast<int>(tok.vocab_size()), 32, 0.1), 7);
  g2st::TrainConfig cfg;
  cfg.batch_size = 10;
  cfg.learning_rate = 3e-3;
  g2st::RunStage(model, tok, corpus, cfg, {"stage2", 300, true, 2});

  std::vector<PredictionDistribution> preds;
  std::vector<std::vector<TokenId>> targets;
  std::size_t exact = 0;
  for (const auto& ex : corpus.examples()) {
    const auto enc = g2st::EncodeExample(tok, ex.source, ex.target, model.config().max_seq_len);
    preds.push_back(g2st::Forward(model, enc.src, enc.tgt_in, {0, false}));
    targets.push_back(enc.tgt_out);
    const auto out = g2st::GreedyDecode(model, enc.src, 64);
    exact += tok.Decode(out) == ex.target;
  }
  const double ce = g2st::CeLossSingle(preds, targets);
  return {ce < 0.05 && exact == corpus.size(),
          Format("per-token ce %.4f nats (dropout off), %zu/%zu exact greedy reproductions", ce, exact,
                 corpus.size())};
}

Outcome Determinism(const fs::path& work) {
  const auto spec = g2st::SynthesizeLexicon(30, 30, 9);
  g2st::SaveParallelCorpus(g2st::GenerateSyntheticCorpus(spec, 120), work / "domain.jsonl");
  g2st::SaveParallelCorpus(g2st::GenerateSyntheticCorpus(g2st::GeneralDomainSpec(spec), 120),
                           work / "general.jsonl");
  g2st::SaveTermPairs(spec.term_lexicon, work / "terms.jsonl");
  const json config{
      {"seed", 17},
      {"paths",
       {{"term_pairs", (work / "terms.jsonl").string()},
        {"parallel_corpus", (work / "domain.jsonl").string()},
        {"general_corpus", (work / "general.jsonl").string()},
        {"output_dir", (work / "run").string()}}},
      {"train_count", 100},
      {"model",
       {{"d_model", 32}, {"n_heads", 4}, {"n_layers_enc", 1}, {"n_layers_dec", 1}, {"ffn_dim", 64},
        {"max_seq_len", 32}}},
      {"base", {{"vocab_size", 200}, {"epochs", 2}, {"batch_size", 16}}},
      {"train", {{"batch_size", 16}, {"learning_rate", 1e-3}, {"epochs_stage1", 1}, {"epochs_stage2", 2}}}};

  const std::vector<std::string> artifacts = {
      "report.json",     "eval.json",        "train_log.jsonl", "translations.jsonl", "model.ckpt",
      "tokenizer.json",  "stage1.ckpt",      "stage2.ckpt",     "base/model.ckpt",    "base/tokenizer.json",
      "translate.jsonl", "translate_eval.json"};
  std::vector<std::vector<std::string>> runs;
  for (int attempt = 0; attempt < 2; ++attempt) {
    fs::remove_all(work / "run");
    const auto rc = g2st::RunConfig::FromJson(config);
    g2st::RunPipeline(rc);
    const fs::path out = work / "run";
    std::string inputs;
    const auto domain = g2st::LoadParallelCorpus(work / "domain.jsonl");
    for (const auto& ex : domain.examples()) {
      inputs += json{{"id", ex.id}, {"source", ex.source}}.dump() + "\n";
    }
    g2st::WriteFile(work / "inputs.jsonl", inputs);
    g2st::TranslateFile(out / "model.ckpt", out / "tokenizer.json", work / "inputs.jsonl",
                        out / "translate.jsonl", 32);
    const auto eval = g2st::EvaluateFiles(out / "translate.jsonl", work / "domain.jsonl");
    g2st::WriteFile(out / "translate_eval.json", eval.ToJson().dump(2) + "\n");
    std::vector<std::string> bytes;
    for (const auto& name : artifacts) bytes.push_back(g2st::ReadFile(out / name));
    runs.push_back(std::move(bytes));
  }
  std::size_t identical = 0;
  std::string differing;
  for (std::size_t i = 0; i < artifacts.size(); ++i) {
    if (runs[0][i] == runs[1][i]) {
      ++identical;
    } else {
      differing += " " + artifacts[i];
    }
  }
  return {identical == artifacts.size(),
          Format("%zu/%zu artifacts byte-identical across two runs%s%s", identical, artifacts.size(),
                 differing.empty() ? "" : "; differing:", differing.c_str())};
}

struct Criterion {
  int number;
  const char* name;
  double limit_seconds;  // 0: no runtime bound
  std::function<Outcome()> run;
};

}  // namespace

// Optional arguments select criteria by number; default runs all.
int main(int argc, char** argv) {
  std::vector<int> selected;
  for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
  g2st::testing::TempDir work;
  fs::create_directories(work / "ablation");
  fs::create_directories(work / "determinism");
  const std::vector<Criterion> criteria = {
      {1, "loss identities", 5.0, LossIdentities},
      {2, "dropout-zero collapse", 30.0, DropoutZeroCollapse},
      {3, "gradient check", 120.0, GradientCheck},
      {4, "metric oracles", 60.0, MetricOracles},
      {5, "tokenizer expansion", 10.0, TokenizerExpansion},
      {6, "ablation ordering", 900.0, [&] { return AblationOrdering(work / "ablation"); }},
      {7, "overfit sanity", 120.0, Overfit},
      {8, "determinism", 0.0, [&] { return Determinism(work / "determinism"); }},
  };
  int failures = 0;
  int ran = 0;
  for (const auto& c : criteria) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), c.number) == selected.end()) {
      continue;
    }
    ++ran;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome = {false, std::string("error: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.limit_seconds == 0.0 || seconds < c.limit_seconds;
    const bool pass = outcome.pass && in_time;
    failures += !pass;
    std::string timing = Format("%.1fs", seconds);
    if (c.limit_seconds > 0.0) timing += Format(" of %.0fs", c.limit_seconds);
    std::printf("[%s] criterion %d %s: %s (%s)\n", pass ? "PASS" : "FAIL", c.number, c.name,
                outcome.detail.c_str(), timing.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", ran - failures, ran);
  return failures == 0 ? 0 : 1;
}
