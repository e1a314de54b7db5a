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

// Compact pre-LN encoder-decoder transformer with a shared source/target
// vocabulary, tied input embeddings and an untied output projection.

#ifndef G2ST_MODEL_HPP_
#define G2ST_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "g2st/autograd.hpp"
#include "g2st/tokenizer.hpp"
#include "json.hpp"

namespace g2st {

struct ModelConfig {
  int d_model = 128;
  int n_heads = 4;
  int n_layers_enc = 2;
  int n_layers_dec = 2;
  int ffn_dim = 512;
  double dropout_rate = 0.1;
  int max_seq_len = 64;
  int vocab_size = 0;

  int head_dim() const { return d_model / n_heads; }
  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static ModelConfig FromJson(const nlohmann::json& doc);

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

struct NamedTensor {
  std::string name;
  Matrix value;
};

// The trainable weights. Values are kept exactly representable as float32,
// the checkpoint storage precision, so a save/load cycle is lossless.
class ModelParameters {
 public:
  ModelParameters(ModelConfig config, std::vector<NamedTensor> tensors);

  const ModelConfig& config() const { return config_; }
  const std::vector<NamedTensor>& tensors() const { return tensors_; }
  std::vector<NamedTensor>& mutable_tensors() { return tensors_; }

  std::size_t IndexOf(std::string_view name) const;
  const Matrix& at(std::string_view name) const { return tensors_[IndexOf(name)].value; }
  Matrix& at(std::string_view name) { return tensors_[IndexOf(name)].value; }
  std::size_t num_scalars() const;

  friend bool operator==(const ModelParameters& a, const ModelParameters& b);

 private:
  ModelConfig config_;
  std::vector<NamedTensor> tensors_;
  std::unordered_map<std::string, std::size_t> index_;
};

// One gradient matrix per parameter tensor, same order and shapes.
using Gradients = std::vector<Matrix>;
Gradients ZeroGradients(const ModelParameters& params);

// Rounds every entry to the nearest float32.
void RoundToFloat(Matrix& m);

// Weights ~ N(0, 1/d_model), biases zero, layer-norm gains one.
ModelParameters InitModel(const ModelConfig& config, std::uint64_t seed);

struct DropoutPlan {
  std::uint64_t seed = 0;
  bool enabled = false;
};

// Next-token distributions for each decoder position (rows sum to one).
struct PredictionDistribution {
  Matrix probs;
  std::vector<std::uint8_t> mask;  // 1 = real position

  std::size_t rows() const { return static_cast<std::size_t>(probs.rows()); }
};

// Teacher-forced pass: `tgt` is the decoder input (gold prefix starting with
// bos); row t predicts the token following tgt[t].
PredictionDistribution Forward(const ModelParameters& params, std::span<const TokenId> src,
                               std::span<const TokenId> tgt, const DropoutPlan& plan);
Matrix ForwardLogits(const ModelParameters& params, std::span<const TokenId> src,
                     std::span<const TokenId> tgt, const DropoutPlan& plan);

// Two dropout-perturbed passes with sub-seeds 2*seed and 2*seed + 1.
std::pair<PredictionDistribution, PredictionDistribution> DualForward(
    const ModelParameters& params, std::span<const TokenId> src, std::span<const TokenId> tgt,
    std::uint64_t seed);

enum class EmbeddingInit { kMean, kRandom };

// Grows the embedding table and output projection to `new_vocab_size` rows.
// Existing rows are copied bit-for-bit.
ModelParameters ResizeEmbeddings(const ModelParameters& params, int new_vocab_size,
                                 EmbeddingInit strategy, std::uint64_t seed);

// Dropout off. Appends the argmax token (ties to the smallest id) until eos
// or `max_len` tokens; the returned sequence excludes eos.
std::vector<TokenId> GreedyDecode(const ModelParameters& params, std::span<const TokenId> src,
                                  std::size_t max_len);

// Builds the model's computation on a tape. With `grads` non-null, parameter
// gradients accumulate into it on Tape::Backward.
class BoundModel {
 public:
  BoundModel(Tape& tape, const ModelParameters& params, Gradients* grads);

  // `rng` null disables dropout.
  Tape::Id Encode(std::span<const TokenId> src, double rate, DropoutRng* rng);
  Tape::Id DecodeHidden(Tape::Id memory, std::span<const TokenId> tgt, double rate,
                        DropoutRng* rng);
  Tape::Id Project(Tape::Id hidden);
  Tape::Id Logits(std::span<const TokenId> src, std::span<const TokenId> tgt, double rate,
                  DropoutRng* rng);

 private:
  Tape::Id P(std::string_view name) const { return leaf_[params_.IndexOf(name)]; }
  Tape::Id Embed(std::span<const TokenId> ids, double rate, DropoutRng* rng);
  Tape::Id AttentionBlock(const std::string& prefix, Tape::Id query_in, Tape::Id kv_in,
                          bool causal, double rate, DropoutRng* rng);
  Tape::Id FeedForward(const std::string& prefix, Tape::Id x, double rate, DropoutRng* rng);
  Tape::Id Norm(const std::string& prefix, Tape::Id x);
  void CheckIds(std::span<const TokenId> ids, const char* what) const;

  Tape& tape_;
  const ModelParameters& params_;
  std::vector<Tape::Id> leaf_;
  Matrix positions_;
};

// Checkpoint container: 8-byte magic "G2STCKPT", little-endian u64 header
// length, JSON header (format version, config, tensor names, shapes and
// payload byte offsets, free-form metadata), then float32 LE payloads.
std::string SerializeCheckpoint(const ModelParameters& params,
                                const nlohmann::ordered_json& metadata);
ModelParameters ParseCheckpoint(std::string_view bytes, nlohmann::json* metadata = nullptr);
void SaveCheckpoint(const ModelParameters& params, const std::filesystem::path& path,
                    const nlohmann::ordered_json& metadata);
ModelParameters LoadCheckpoint(const std::filesystem::path& path,
                               nlohmann::json* metadata = nullptr);

}  // namespace g2st

#endif  // G2ST_MODEL_HPP_
