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

#ifndef G2ST_TOKENIZER_HPP_
#define G2ST_TOKENIZER_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"

namespace g2st {

using TokenId = std::int32_t;

struct OovReport {
  std::size_t total_symbols = 0;
  std::size_t unk_symbols = 0;
  double rate = 0.0;
  std::vector<std::string> sample_unknowns;  // first 20 distinct, in order seen

  nlohmann::ordered_json ToJson() const;
};

// Character-based byte-pair-encoding tokenizer.
//
// Base symbols are Unicode scalar values. Text is cut into chunks before
// every space so that merges never cross a word boundary while the space
// itself stays part of the following chunk; decoding is plain
// concatenation. Ids are dense, with the four specials fixed at 0..3.
class Tokenizer {
 public:
  static constexpr TokenId kUnk = 0;
  static constexpr TokenId kBos = 1;
  static constexpr TokenId kEos = 2;
  static constexpr TokenId kPad = 3;
  static constexpr std::size_t kNumSpecials = 4;
  static constexpr std::string_view kUnkMarker = "⟨unk⟩";

  // Greedy most-frequent-pair merging; ties go to the lexicographically
  // smallest (left, right) pair. Stops at target_vocab_size or when no
  // pair occurs at least twice.
  static Tokenizer Train(std::span<const std::string> texts, std::size_t target_vocab_size);

  std::vector<TokenId> Encode(std::string_view text) const;

  // Throws kOutOfRange for ids >= vocab_size(). Unk renders as ⟨unk⟩, the
  // other specials render as nothing.
  std::string Decode(std::span<const TokenId> ids) const;

  // Appends single characters not yet in the vocabulary. Existing ids and
  // merges are untouched; no merges are learned for the new characters.
  Tokenizer Expand(std::span<const std::string> new_chars) const;

  OovReport Oov(std::span<const std::string> texts) const;

  std::size_t vocab_size() const { return id_to_token_.size(); }
  std::optional<TokenId> Find(std::string_view token) const;
  const std::string& token(TokenId id) const { return id_to_token_.at(static_cast<std::size_t>(id)); }
  const std::vector<std::pair<std::string, std::string>>& merges() const { return merges_; }

  nlohmann::ordered_json ToJson() const;
  static Tokenizer FromJson(const nlohmann::json& doc);
  std::string Serialize() const;
  void Save(const std::filesystem::path& path) const;
  // Adds a top-level "metadata" object; readers ignore it.
  void Save(const std::filesystem::path& path, const nlohmann::ordered_json& metadata) const;
  static Tokenizer Load(const std::filesystem::path& path);

  friend bool operator==(const Tokenizer& a, const Tokenizer& b) {
    return a.id_to_token_ == b.id_to_token_ && a.merges_ == b.merges_;
  }

 private:
  struct MergeRule {
    std::size_t rank;
    TokenId result;
  };

  Tokenizer() = default;
  TokenId AddToken(std::string token);
  void AddMerge(const std::string& left, const std::string& right);
  void EncodeChunk(std::string_view chunk, std::vector<TokenId>& out) const;

  std::vector<std::string> id_to_token_;
  std::unordered_map<std::string, TokenId> token_to_id_;
  std::vector<std::pair<std::string, std::string>> merges_;
  std::unordered_map<std::uint64_t, MergeRule> merge_rules_;
};

// Splits text into chunks, each starting at a space (except possibly the first).
std::vector<std::string_view> SplitChunks(std::string_view text);

// Every distinct character of the texts, sorted by UTF-8 bytes.
std::vector<std::string> CharacterSet(std::span<const std::string> texts);

// Expansion list: UTF-8, one character per line. Blank lines are skipped;
// a line holding more than one character is an error.
std::vector<std::string> LoadExpansionList(const std::filesystem::path& path);

}  // namespace g2st

#endif  // G2ST_TOKENIZER_HPP_
