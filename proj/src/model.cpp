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

#include "g2st/model.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <random>

#include "g2st/common.hpp"

namespace g2st {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::string_view kMagic = "G2STCKPT";
constexpr int kCheckpointVersion = 1;

enum class Kind { kWeight, kBias, kGain };

struct TensorSpec {
  std::string name;
  Eigen::Index rows;
  Eigen::Index cols;
  Kind kind;
};

void AppendAttention(std::vector<TensorSpec>& out, const std::string& p, int d) {
  for (const char* m : {"q", "k", "v", "o"}) {
    out.push_back({p + ".w" + m, d, d, Kind::kWeight});
    out.push_back({p + ".b" + m, 1, d, Kind::kBias});
  }
}

void AppendNorm(std::vector<TensorSpec>& out, const std::string& p, int d) {
  out.push_back({p + ".g", 1, d, Kind::kGain});
  out.push_back({p + ".b", 1, d, Kind::kBias});
}

void AppendFfn(std::vector<TensorSpec>& out, const std::string& p, int d, int ffn) {
  out.push_back({p + ".w1", d, ffn, Kind::kWeight});
  out.push_back({p + ".b1", 1, ffn, Kind::kBias});
  out.push_back({p + ".w2", ffn, d, Kind::kWeight});
  out.push_back({p + ".b2", 1, d, Kind::kBias});
}

std::vector<TensorSpec> Layout(const ModelConfig& c) {
  std::vector<TensorSpec> out;
  const int d = c.d_model;
  out.push_back({"embed", c.vocab_size, d, Kind::kWeight});
  for (int l = 0; l < c.n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    AppendNorm(out, p + ".ln1", d);
    AppendAttention(out, p + ".attn", d);
    AppendNorm(out, p + ".ln2", d);
    AppendFfn(out, p + ".ffn", d, c.ffn_dim);
  }
  AppendNorm(out, "enc.ln", d);
  for (int l = 0; l < c.n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    AppendNorm(out, p + ".ln1", d);
    AppendAttention(out, p + ".self", d);
    AppendNorm(out, p + ".ln2", d);
    AppendAttention(out, p + ".cross", d);
    AppendNorm(out, p + ".ln3", d);
    AppendFfn(out, p + ".ffn", d, c.ffn_dim);
  }
  AppendNorm(out, "dec.ln", d);
  out.push_back({"out.w", c.vocab_size, d, Kind::kWeight});
  out.push_back({"out.b", 1, c.vocab_size, Kind::kBias});
  return out;
}

Matrix SinusoidTable(int rows, int d) {
  Matrix pe(rows, d);
  for (int pos = 0; pos < rows; ++pos) {
    for (int i = 0; i < d; ++i) {
      const double freq = std::pow(10000.0, -static_cast<double>(2 * (i / 2)) / d);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos * freq) : std::cos(pos * freq);
    }
  }
  return pe;
}

void FillNormal(Matrix& m, double stddev, std::mt19937_64& rng) {
  std::normal_distribution<double> dist(0.0, stddev);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  RoundToFloat(m);
}

void CheckSequence(const ModelConfig& c, std::span<const TokenId> ids, const char* what) {
  if (ids.empty()) {
    throw Error(ErrorCode::kInvalidArgument, std::string(what) + " sequence is empty");
  }
  if (ids.size() > static_cast<std::size_t>(c.max_seq_len)) {
    throw Error(ErrorCode::kInvalidArgument,
                std::string(what) + " sequence length " + std::to_string(ids.size()) +
                    " exceeds max_seq_len " + std::to_string(c.max_seq_len));
  }
}

void PutU64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xFF);
}

std::uint64_t GetU64(std::string_view in) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(in[i])) << (8 * i);
  return v;
}

}  // namespace

void ModelConfig::Validate() const {
  std::string problems;
  auto check = [&](bool ok, const char* msg) {
    if (!ok) problems += std::string(problems.empty() ? "" : "; ") + msg;
  };
  check(d_model > 0, "d_model must be positive");
  check(n_heads > 0, "n_heads must be positive");
  check(n_heads > 0 && d_model % n_heads == 0, "n_heads must divide d_model");
  check(n_layers_enc > 0 && n_layers_dec > 0, "layer counts must be positive");
  check(ffn_dim > 0, "ffn_dim must be positive");
  check(dropout_rate >= 0.0 && dropout_rate < 1.0, "dropout_rate must lie in [0, 1)");
  check(max_seq_len > 1, "max_seq_len must be at least 2");
  check(vocab_size > static_cast<int>(Tokenizer::kNumSpecials), "vocab_size must exceed the 4 specials");
  if (!problems.empty()) throw Error(ErrorCode::kConfig, "invalid model config: " + problems);
}

ordered_json ModelConfig::ToJson() const {
  return ordered_json{{"d_model", d_model},           {"n_heads", n_heads},
                      {"n_layers_enc", n_layers_enc}, {"n_layers_dec", n_layers_dec},
                      {"ffn_dim", ffn_dim},           {"dropout_rate", dropout_rate},
                      {"max_seq_len", max_seq_len},   {"vocab_size", vocab_size}};
}

ModelConfig ModelConfig::FromJson(const json& doc) {
  ModelConfig c;
  try {
    c.d_model = doc.value("d_model", c.d_model);
    c.n_heads = doc.value("n_heads", c.n_heads);
    c.n_layers_enc = doc.value("n_layers_enc", c.n_layers_enc);
    c.n_layers_dec = doc.value("n_layers_dec", c.n_layers_dec);
    c.ffn_dim = doc.value("ffn_dim", c.ffn_dim);
    c.dropout_rate = doc.value("dropout_rate", c.dropout_rate);
    c.max_seq_len = doc.value("max_seq_len", c.max_seq_len);
    c.vocab_size = doc.value("vocab_size", c.vocab_size);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid model config: ") + e.what());
  }
  return c;
}

ModelParameters::ModelParameters(ModelConfig config, std::vector<NamedTensor> tensors)
    : config_(config), tensors_(std::move(tensors)) {
  for (std::size_t i = 0; i < tensors_.size(); ++i) index_.emplace(tensors_[i].name, i);
}

std::size_t ModelParameters::IndexOf(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument, "unknown parameter tensor: " + std::string(name));
  }
  return it->second;
}

std::size_t ModelParameters::num_scalars() const {
  std::size_t n = 0;
  for (const auto& t : tensors_) n += static_cast<std::size_t>(t.value.size());
  return n;
}

bool operator==(const ModelParameters& a, const ModelParameters& b) {
  if (!(a.config_ == b.config_) || a.tensors_.size() != b.tensors_.size()) return false;
  for (std::size_t i = 0; i < a.tensors_.size(); ++i) {
    const auto& x = a.tensors_[i];
    const auto& y = b.tensors_[i];
    if (x.name != y.name || x.value.rows() != y.value.rows() || x.value.cols() != y.value.cols()) {
      return false;
    }
    if (std::memcmp(x.value.data(), y.value.data(),
                    static_cast<std::size_t>(x.value.size()) * sizeof(double)) != 0) {
      return false;
    }
  }
  return true;
}

Gradients ZeroGradients(const ModelParameters& params) {
  Gradients g;
  g.reserve(params.tensors().size());
  for (const auto& t : params.tensors()) g.push_back(Matrix::Zero(t.value.rows(), t.value.cols()));
  return g;
}

void RoundToFloat(Matrix& m) {
  for (Eigen::Index i = 0; i < m.size(); ++i) {
    m.data()[i] = static_cast<double>(static_cast<float>(m.data()[i]));
  }
}

ModelParameters InitModel(const ModelConfig& config, std::uint64_t seed) {
  config.Validate();
  std::mt19937_64 rng(seed);
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  std::vector<NamedTensor> tensors;
  for (const auto& spec : Layout(config)) {
    Matrix m(spec.rows, spec.cols);
    switch (spec.kind) {
      case Kind::kWeight: FillNormal(m, scale, rng); break;
      case Kind::kBias: m.setZero(); break;
      case Kind::kGain: m.setOnes(); break;
    }
    tensors.push_back({spec.name, std::move(m)});
  }
  return ModelParameters(config, std::move(tensors));
}

BoundModel::BoundModel(Tape& tape, const ModelParameters& params, Gradients* grads)
    : tape_(tape), params_(params) {
  const auto& ts = params.tensors();
  leaf_.reserve(ts.size());
  for (std::size_t i = 0; i < ts.size(); ++i) {
    leaf_.push_back(tape.Leaf(&ts[i].value, grads ? &(*grads)[i] : nullptr));
  }
  positions_ = SinusoidTable(params.config().max_seq_len, params.config().d_model);
}

void BoundModel::CheckIds(std::span<const TokenId> ids, const char* what) const {
  CheckSequence(params_.config(), ids, what);
  for (TokenId id : ids) {
    if (id < 0 || id >= params_.config().vocab_size) {
      throw Error(ErrorCode::kOutOfRange, std::string(what) + " token id " + std::to_string(id) +
                                              " outside vocabulary of size " +
                                              std::to_string(params_.config().vocab_size));
    }
  }
}

Tape::Id BoundModel::Embed(std::span<const TokenId> ids, double rate, DropoutRng* rng) {
  const double scale = std::sqrt(static_cast<double>(params_.config().d_model));
  auto x = ops::Embedding(tape_, P("embed"), ids, scale);
  x = ops::AddConstant(tape_, x, positions_.topRows(static_cast<Eigen::Index>(ids.size())));
  return ops::Dropout(tape_, x, rate, rng);
}

Tape::Id BoundModel::Norm(const std::string& prefix, Tape::Id x) {
  return ops::LayerNorm(tape_, x, P(prefix + ".g"), P(prefix + ".b"));
}

Tape::Id BoundModel::AttentionBlock(const std::string& p, Tape::Id query_in, Tape::Id kv_in,
                                    bool causal, double rate, DropoutRng* rng) {
  auto q = ops::Linear(tape_, query_in, P(p + ".wq"), P(p + ".bq"));
  auto k = ops::Linear(tape_, kv_in, P(p + ".wk"), P(p + ".bk"));
  auto v = ops::Linear(tape_, kv_in, P(p + ".wv"), P(p + ".bv"));
  auto a = ops::Attention(tape_, q, k, v, params_.config().n_heads, causal, rate, rng);
  auto o = ops::Linear(tape_, a, P(p + ".wo"), P(p + ".bo"));
  return ops::Dropout(tape_, o, rate, rng);
}

Tape::Id BoundModel::FeedForward(const std::string& p, Tape::Id x, double rate, DropoutRng* rng) {
  auto h = ops::Gelu(tape_, ops::Linear(tape_, x, P(p + ".w1"), P(p + ".b1")));
  auto o = ops::Linear(tape_, h, P(p + ".w2"), P(p + ".b2"));
  return ops::Dropout(tape_, o, rate, rng);
}

Tape::Id BoundModel::Encode(std::span<const TokenId> src, double rate, DropoutRng* rng) {
  CheckIds(src, "source");
  auto x = Embed(src, rate, rng);
  for (int l = 0; l < params_.config().n_layers_enc; ++l) {
    const std::string p = "enc." + std::to_string(l);
    auto n1 = Norm(p + ".ln1", x);
    x = ops::Add(tape_, x, AttentionBlock(p + ".attn", n1, n1, false, rate, rng));
    x = ops::Add(tape_, x, FeedForward(p + ".ffn", Norm(p + ".ln2", x), rate, rng));
  }
  return Norm("enc.ln", x);
}

Tape::Id BoundModel::DecodeHidden(Tape::Id memory, std::span<const TokenId> tgt, double rate,
                                  DropoutRng* rng) {
  CheckIds(tgt, "target");
  auto y = Embed(tgt, rate, rng);
  for (int l = 0; l < params_.config().n_layers_dec; ++l) {
    const std::string p = "dec." + std::to_string(l);
    auto n1 = Norm(p + ".ln1", y);
    y = ops::Add(tape_, y, AttentionBlock(p + ".self", n1, n1, true, rate, rng));
    y = ops::Add(tape_, y,
                 AttentionBlock(p + ".cross", Norm(p + ".ln2", y), memory, false, rate, rng));
    y = ops::Add(tape_, y, FeedForward(p + ".ffn", Norm(p + ".ln3", y), rate, rng));
  }
  return Norm("dec.ln", y);
}

Tape::Id BoundModel::Project(Tape::Id hidden) {
  return ops::OutputLogits(tape_, hidden, P("out.w"), P("out.b"));
}

Tape::Id BoundModel::Logits(std::span<const TokenId> src, std::span<const TokenId> tgt,
                            double rate, DropoutRng* rng) {
  const auto memory = Encode(src, rate, rng);
  return Project(DecodeHidden(memory, tgt, rate, rng));
}

Matrix ForwardLogits(const ModelParameters& params, std::span<const TokenId> src,
                     std::span<const TokenId> tgt, const DropoutPlan& plan) {
  Tape tape(false);
  BoundModel model(tape, params, nullptr);
  const double rate = plan.enabled ? params.config().dropout_rate : 0.0;
  DropoutRng rng(plan.seed);
  const auto logits = model.Logits(src, tgt, rate, plan.enabled ? &rng : nullptr);
  return tape.value(logits);
}

PredictionDistribution Forward(const ModelParameters& params, std::span<const TokenId> src,
                               std::span<const TokenId> tgt, const DropoutPlan& plan) {
  PredictionDistribution out;
  out.probs = SoftmaxRows(ForwardLogits(params, src, tgt, plan));
  out.mask.assign(static_cast<std::size_t>(out.probs.rows()), 1);
  return out;
}

std::pair<PredictionDistribution, PredictionDistribution> DualForward(
    const ModelParameters& params, std::span<const TokenId> src, std::span<const TokenId> tgt,
    std::uint64_t seed) {
  return {Forward(params, src, tgt, DropoutPlan{seed * 2, true}),
          Forward(params, src, tgt, DropoutPlan{seed * 2 + 1, true})};
}

ModelParameters ResizeEmbeddings(const ModelParameters& params, int new_vocab_size,
                                 EmbeddingInit strategy, std::uint64_t seed) {
  const ModelConfig& old_config = params.config();
  if (new_vocab_size < old_config.vocab_size) {
    throw Error(ErrorCode::kInvalidArgument,
                "cannot shrink vocabulary from " + std::to_string(old_config.vocab_size) +
                    " to " + std::to_string(new_vocab_size));
  }
  if (new_vocab_size == old_config.vocab_size) return params;

  ModelConfig config = old_config;
  config.vocab_size = new_vocab_size;
  const Eigen::Index old_v = old_config.vocab_size;
  const Eigen::Index added = new_vocab_size - old_v;
  const double scale = 1.0 / std::sqrt(static_cast<double>(config.d_model));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);

  std::vector<NamedTensor> tensors = params.tensors();
  for (auto& t : tensors) {
    if (t.name == "embed" || t.name == "out.w") {
      Matrix grown(new_vocab_size, t.value.cols());
      grown.topRows(old_v) = t.value;
      const Eigen::RowVectorXd mean = t.value.colwise().mean();
      for (Eigen::Index r = old_v; r < new_vocab_size; ++r) {
        for (Eigen::Index c = 0; c < grown.cols(); ++c) {
          grown(r, c) = strategy == EmbeddingInit::kMean ? mean(c) + 0.01 * scale * noise(rng)
                                                         : scale * noise(rng);
        }
      }
      auto tail = grown.bottomRows(added);
      Matrix rounded = tail;
      RoundToFloat(rounded);
      tail = rounded;
      t.value = std::move(grown);
    } else if (t.name == "out.b") {
      Matrix grown(1, new_vocab_size);
      grown.leftCols(old_v) = t.value;
      const double fill = strategy == EmbeddingInit::kMean ? t.value.mean() : 0.0;
      grown.rightCols(added).setConstant(static_cast<double>(static_cast<float>(fill)));
      t.value = std::move(grown);
    }
  }
  return ModelParameters(config, std::move(tensors));
}

std::vector<TokenId> GreedyDecode(const ModelParameters& params, std::span<const TokenId> src,
                                  std::size_t max_len) {
  const auto limit = std::min<std::size_t>(max_len, static_cast<std::size_t>(params.config().max_seq_len - 1));
  Matrix memory;
  {
    Tape tape(false);
    BoundModel model(tape, params, nullptr);
    memory = tape.value(model.Encode(src, 0.0, nullptr));
  }
  const Matrix& w = params.at("out.w");
  const Matrix& b = params.at("out.b");
  std::vector<TokenId> prefix{Tokenizer::kBos};
  std::vector<TokenId> out;
  while (out.size() < limit) {
    Tape tape(false);
    BoundModel model(tape, params, nullptr);
    const auto mem = tape.Constant(memory);
    const Matrix& hidden = tape.value(model.DecodeHidden(mem, prefix, 0.0, nullptr));
    // Only the last position's logits are needed.
    const Eigen::Index last = hidden.rows() - 1;
    TokenId best = 0;
    double best_logit = -std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < w.rows(); ++j) {
      double s = 0.0;
      for (Eigen::Index c = 0; c < w.cols(); ++c) s += hidden(last, c) * w(j, c);
      s += b(0, j);
      if (s > best_logit) {
        best_logit = s;
        best = static_cast<TokenId>(j);
      }
    }
    if (best == Tokenizer::kEos) break;
    out.push_back(best);
    prefix.push_back(best);
  }
  return out;
}

std::string SerializeCheckpoint(const ModelParameters& params, const ordered_json& metadata) {
  ordered_json tensors = ordered_json::array();
  std::uint64_t offset = 0;
  for (const auto& t : params.tensors()) {
    const auto bytes = static_cast<std::uint64_t>(t.value.size()) * 4;
    tensors.push_back({{"name", t.name},
                       {"shape", {t.value.rows(), t.value.cols()}},
                       {"offset", offset},
                       {"bytes", bytes}});
    offset += bytes;
  }
  ordered_json header{{"format", "g2st-checkpoint"},
                      {"version", kCheckpointVersion},
                      {"dtype", "float32-le"},
                      {"config", params.config().ToJson()},
                      {"tensors", std::move(tensors)},
                      {"metadata", metadata}};
  const std::string header_text = header.dump();
  std::string out(kMagic);
  PutU64(out, header_text.size());
  out += header_text;
  out.reserve(out.size() + offset);
  for (const auto& t : params.tensors()) {
    for (Eigen::Index i = 0; i < t.value.size(); ++i) {
      const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(t.value.data()[i]));
      for (int k = 0; k < 4; ++k) out += static_cast<char>((bits >> (8 * k)) & 0xFF);
    }
  }
  return out;
}

ModelParameters ParseCheckpoint(std::string_view bytes, json* metadata) {
  if (bytes.size() < kMagic.size() + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    throw Error(ErrorCode::kParse, "not a g2st checkpoint (bad magic)");
  }
  const std::uint64_t header_len = GetU64(bytes.substr(kMagic.size(), 8));
  const std::size_t header_start = kMagic.size() + 8;
  if (header_len > bytes.size() - header_start) {
    throw Error(ErrorCode::kParse, "truncated checkpoint header");
  }
  json header;
  try {
    header = json::parse(bytes.substr(header_start, header_len));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("invalid checkpoint header: ") + e.what());
  }
  if (header.value("version", 0) != kCheckpointVersion) {
    throw Error(ErrorCode::kParse, "unsupported checkpoint version");
  }
  const std::string_view payload = bytes.substr(header_start + header_len);
  const ModelConfig config = ModelConfig::FromJson(header.at("config"));
  config.Validate();
  const auto layout = Layout(config);
  const auto& entries = header.at("tensors");
  if (entries.size() != layout.size()) {
    throw Error(ErrorCode::kParse, "checkpoint tensor count does not match its config");
  }
  std::vector<NamedTensor> tensors;
  for (std::size_t i = 0; i < layout.size(); ++i) {
    const auto& e = entries[i];
    const auto& spec = layout[i];
    if (e.at("name").get<std::string>() != spec.name ||
        e.at("shape").at(0).get<Eigen::Index>() != spec.rows ||
        e.at("shape").at(1).get<Eigen::Index>() != spec.cols) {
      throw Error(ErrorCode::kParse, "checkpoint tensor " + spec.name + " has unexpected layout");
    }
    const auto offset = e.at("offset").get<std::uint64_t>();
    const auto count = static_cast<std::uint64_t>(spec.rows * spec.cols);
    if (offset + count * 4 > payload.size()) {
      throw Error(ErrorCode::kParse, "checkpoint payload truncated at " + spec.name);
    }
    Matrix m(spec.rows, spec.cols);
    for (std::uint64_t k = 0; k < count; ++k) {
      std::uint32_t bits = 0;
      for (int b = 0; b < 4; ++b) {
        bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(payload[offset + 4 * k + b])) << (8 * b);
      }
      m.data()[k] = static_cast<double>(std::bit_cast<float>(bits));
    }
    tensors.push_back({spec.name, std::move(m)});
  }
  if (metadata) *metadata = header.value("metadata", json::object());
  return ModelParameters(config, std::move(tensors));
}

void SaveCheckpoint(const ModelParameters& params, const std::filesystem::path& path,
                    const ordered_json& metadata) {
  WriteFile(path, SerializeCheckpoint(params, metadata));
}

ModelParameters LoadCheckpoint(const std::filesystem::path& path, json* metadata) {
  return ParseCheckpoint(ReadFile(path), metadata);
}

}  // namespace g2st
