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

#include "g2st/tokenizer.hpp"

#include <algorithm>
#include <array>
#include <map>
#include <set>
#include <sstream>
#include <unordered_set>

#include "g2st/common.hpp"

namespace g2st {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr std::array<const char*, Tokenizer::kNumSpecials> kSpecialSurfaces = {
    "<unk>", "<s>", "</s>", "<pad>"};
constexpr std::array<const char*, Tokenizer::kNumSpecials> kSpecialNames = {
    "unk", "bos", "eos", "pad"};

std::uint64_t PairKey(std::int64_t left, std::int64_t right) {
  return (static_cast<std::uint64_t>(left) << 32) | static_cast<std::uint32_t>(right);
}

bool IsSpecialSurface(std::string_view s) {
  return std::find(kSpecialSurfaces.begin(), kSpecialSurfaces.end(), s) != kSpecialSurfaces.end();
}

// Replaces every non-overlapping (left, right) occurrence, scanning left to right.
template <typename Sym>
void MergeAll(std::vector<Sym>& syms, Sym left, Sym right, Sym merged) {
  std::size_t w = 0;
  for (std::size_t r = 0; r < syms.size(); ++w) {
    if (r + 1 < syms.size() && syms[r] == left && syms[r + 1] == right) {
      syms[w] = merged;
      r += 2;
    } else {
      syms[w] = syms[r];
      r += 1;
    }
  }
  syms.resize(w);
}

}  // namespace

std::vector<std::string_view> SplitChunks(std::string_view text) {
  std::vector<std::string_view> chunks;
  std::size_t start = 0;
  for (std::size_t i = 1; i < text.size(); ++i) {
    if (text[i] == ' ') {
      chunks.push_back(text.substr(start, i - start));
      start = i;
    }
  }
  if (start < text.size()) chunks.push_back(text.substr(start));
  return chunks;
}

std::vector<std::string> CharacterSet(std::span<const std::string> texts) {
  std::set<std::string> chars;
  for (const auto& t : texts) {
    for (auto& c : Utf8Chars(t)) chars.insert(std::move(c));
  }
  return {chars.begin(), chars.end()};
}

ordered_json OovReport::ToJson() const {
  return ordered_json{{"total_symbols", total_symbols},
                      {"unk_symbols", unk_symbols},
                      {"rate", rate},
                      {"sample_unknowns", sample_unknowns}};
}

TokenId Tokenizer::AddToken(std::string token) {
  if (auto it = token_to_id_.find(token); it != token_to_id_.end()) return it->second;
  const auto id = static_cast<TokenId>(id_to_token_.size());
  token_to_id_.emplace(token, id);
  id_to_token_.push_back(std::move(token));
  return id;
}

void Tokenizer::AddMerge(const std::string& left, const std::string& right) {
  const auto l = Find(left);
  const auto r = Find(right);
  if (!l || !r) {
    throw Error(ErrorCode::kParse, "merge references unknown symbol: " + left + " + " + right);
  }
  const TokenId result = AddToken(left + right);
  merge_rules_.emplace(PairKey(*l, *r), MergeRule{merges_.size(), result});
  merges_.emplace_back(left, right);
}

std::optional<TokenId> Tokenizer::Find(std::string_view token) const {
  auto it = token_to_id_.find(std::string(token));
  if (it == token_to_id_.end()) return std::nullopt;
  return it->second;
}

Tokenizer Tokenizer::Train(std::span<const std::string> texts, std::size_t target_vocab_size) {
  if (texts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot train a tokenizer on an empty corpus");
  }
  std::map<std::string, std::size_t> chunk_counts;
  for (const auto& text : texts) {
    for (auto chunk : SplitChunks(text)) ++chunk_counts[std::string(chunk)];
  }
  const auto base = CharacterSet(texts);
  if (base.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "cannot train a tokenizer on an empty corpus");
  }
  if (target_vocab_size <= base.size() + kNumSpecials) {
    throw Error(ErrorCode::kInvalidArgument,
                "target vocabulary size " + std::to_string(target_vocab_size) +
                    " must exceed " + std::to_string(base.size()) + " base characters + " +
                    std::to_string(kNumSpecials) + " specials");
  }

  Tokenizer tok;
  for (const char* s : kSpecialSurfaces) tok.AddToken(s);
  for (const auto& c : base) tok.AddToken(c);

  // Interned symbol strings; distinct from token ids so training stays
  // independent of vocabulary bookkeeping.
  std::vector<std::string> sym_str;
  std::unordered_map<std::string, std::int64_t> sym_id;
  auto intern = [&](const std::string& s) {
    auto [it, inserted] = sym_id.emplace(s, static_cast<std::int64_t>(sym_str.size()));
    if (inserted) sym_str.push_back(s);
    return it->second;
  };

  struct Word {
    std::vector<std::int64_t> syms;
    std::size_t count;
  };
  std::vector<Word> words;
  words.reserve(chunk_counts.size());
  for (const auto& [chunk, count] : chunk_counts) {
    Word w{{}, count};
    for (const auto& c : Utf8Chars(chunk)) w.syms.push_back(intern(c));
    words.push_back(std::move(w));
  }

  std::unordered_set<std::uint64_t> banned;
  std::unordered_map<std::uint64_t, std::size_t> pair_counts;
  while (tok.vocab_size() < target_vocab_size) {
    pair_counts.clear();
    for (const auto& w : words) {
      for (std::size_t i = 0; i + 1 < w.syms.size(); ++i) {
        pair_counts[PairKey(w.syms[i], w.syms[i + 1])] += w.count;
      }
    }
    std::uint64_t best_key = 0;
    std::size_t best_count = 0;
    for (const auto& [key, count] : pair_counts) {
      if (count < 2 || banned.count(key)) continue;
      if (count > best_count) {
        best_key = key;
        best_count = count;
        continue;
      }
      if (count == best_count) {
        const auto& a = std::pair<const std::string&, const std::string&>(
            sym_str[key >> 32], sym_str[key & 0xffffffffULL]);
        const auto& b = std::pair<const std::string&, const std::string&>(
            sym_str[best_key >> 32], sym_str[best_key & 0xffffffffULL]);
        if (a < b) best_key = key;
      }
    }
    if (best_count < 2) break;
    const auto left = static_cast<std::int64_t>(best_key >> 32);
    const auto right = static_cast<std::int64_t>(best_key & 0xffffffffULL);
    const std::string merged = sym_str[left] + sym_str[right];
    if (IsSpecialSurface(merged)) {
      banned.insert(best_key);
      continue;
    }
    const auto merged_id = intern(merged);
    for (auto& w : words) MergeAll(w.syms, left, right, merged_id);
    tok.AddMerge(sym_str[left], sym_str[right]);
  }
  return tok;
}

void Tokenizer::EncodeChunk(std::string_view chunk, std::vector<TokenId>& out) const {
  std::vector<TokenId> syms;
  for (const auto& c : Utf8Chars(chunk)) {
    auto it = token_to_id_.find(c);
    syms.push_back(it == token_to_id_.end() ? -1 : it->second);
  }
  while (syms.size() > 1) {
    const MergeRule* best = nullptr;
    TokenId best_left = 0;
    TokenId best_right = 0;
    for (std::size_t i = 0; i + 1 < syms.size(); ++i) {
      if (syms[i] < 0 || syms[i + 1] < 0) continue;
      auto it = merge_rules_.find(PairKey(syms[i], syms[i + 1]));
      if (it != merge_rules_.end() && (!best || it->second.rank < best->rank)) {
        best = &it->second;
        best_left = syms[i];
        best_right = syms[i + 1];
      }
    }
    if (!best) break;
    MergeAll(syms, best_left, best_right, best->result);
  }
  for (TokenId s : syms) out.push_back(s < 0 ? kUnk : s);
}

std::vector<TokenId> Tokenizer::Encode(std::string_view text) const {
  std::vector<TokenId> out;
  for (auto chunk : SplitChunks(text)) EncodeChunk(chunk, out);
  return out;
}

std::string Tokenizer::Decode(std::span<const TokenId> ids) const {
  std::string out;
  for (TokenId id : ids) {
    if (id < 0 || static_cast<std::size_t>(id) >= vocab_size()) {
      throw Error(ErrorCode::kOutOfRange, "token id " + std::to_string(id) +
                                              " out of range for vocabulary of size " +
                                              std::to_string(vocab_size()));
    }
    if (id == kUnk) {
      out += kUnkMarker;
    } else if (static_cast<std::size_t>(id) >= kNumSpecials) {
      out += id_to_token_[static_cast<std::size_t>(id)];
    }
  }
  return out;
}

Tokenizer Tokenizer::Expand(std::span<const std::string> new_chars) const {
  for (const auto& c : new_chars) {
    if (Utf8Length(c) != 1) {
      throw Error(ErrorCode::kInvalidArgument,
                  "expansion entry must be exactly one character: \"" + c + "\"");
    }
  }
  Tokenizer out = *this;
  for (const auto& c : new_chars) out.AddToken(c);
  return out;
}

OovReport Tokenizer::Oov(std::span<const std::string> texts) const {
  OovReport report;
  std::unordered_set<std::string> seen;
  for (const auto& text : texts) {
    for (auto& c : Utf8Chars(text)) {
      ++report.total_symbols;
      if (token_to_id_.count(c)) continue;
      ++report.unk_symbols;
      if (report.sample_unknowns.size() < 20 && seen.insert(c).second) {
        report.sample_unknowns.push_back(std::move(c));
      }
    }
  }
  report.rate = static_cast<double>(report.unk_symbols) /
                static_cast<double>(std::max<std::size_t>(report.total_symbols, 1));
  return report;
}

ordered_json Tokenizer::ToJson() const {
  ordered_json specials;
  for (std::size_t i = 0; i < kNumSpecials; ++i) specials[kSpecialNames[i]] = kSpecialSurfaces[i];
  ordered_json vocab = ordered_json::object();
  for (std::size_t i = 0; i < id_to_token_.size(); ++i) vocab[id_to_token_[i]] = i;
  ordered_json merges = ordered_json::array();
  for (const auto& [l, r] : merges_) merges.push_back({l, r});
  return ordered_json{{"format", "g2st-bpe"},
                      {"version", 1},
                      {"specials", std::move(specials)},
                      {"vocab", std::move(vocab)},
                      {"merges", std::move(merges)}};
}

Tokenizer Tokenizer::FromJson(const json& doc) {
  Tokenizer tok;
  try {
    const auto& vocab = doc.at("vocab");
    std::vector<std::optional<std::string>> slots(vocab.size());
    for (const auto& [token, id_json] : vocab.items()) {
      const auto id = id_json.get<std::int64_t>();
      if (id < 0 || static_cast<std::size_t>(id) >= slots.size() || slots[static_cast<std::size_t>(id)]) {
        throw Error(ErrorCode::kParse, "tokenizer ids are not dense 0..V-1");
      }
      slots[static_cast<std::size_t>(id)] = token;
    }
    for (std::size_t i = 0; i < kNumSpecials; ++i) {
      if (slots.size() <= i || *slots[i] != kSpecialSurfaces[i]) {
        throw Error(ErrorCode::kParse, "tokenizer specials must occupy ids 0..3");
      }
    }
    for (auto& s : slots) tok.AddToken(std::move(*s));
    // AddMerge would append merged strings missing from the vocabulary;
    // a well-formed file never needs that.
    const std::size_t vocab_before = tok.vocab_size();
    for (const auto& m : doc.at("merges")) {
      tok.AddMerge(m.at(0).get<std::string>(), m.at(1).get<std::string>());
    }
    if (tok.vocab_size() != vocab_before) {
      throw Error(ErrorCode::kParse, "merge result missing from vocabulary");
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("invalid tokenizer document: ") + e.what());
  }
  return tok;
}

std::string Tokenizer::Serialize() const { return ToJson().dump(1) + "\n"; }

void Tokenizer::Save(const std::filesystem::path& path) const { WriteFile(path, Serialize()); }

void Tokenizer::Save(const std::filesystem::path& path, const ordered_json& metadata) const {
  ordered_json doc = ToJson();
  doc["metadata"] = metadata;
  WriteFile(path, doc.dump(1) + "\n");
}

Tokenizer Tokenizer::Load(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return FromJson(doc);
}

std::vector<std::string> LoadExpansionList(const std::filesystem::path& path) {
  std::istringstream in(ReadFile(path));
  std::vector<std::string> chars;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (Utf8Length(line) != 1) {
      throw Error(ErrorCode::kInvalidArgument, path.string() + ":" + std::to_string(line_no) +
                                                   ": expected one character, got \"" + line + "\"");
    }
    chars.push_back(line);
  }
  return chars;
}

}  // namespace g2st
