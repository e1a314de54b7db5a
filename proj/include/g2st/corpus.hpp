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

// Term-pair and parallel-corpus data model: JSONL ingestion, validation,
// seeded splitting and a keyword-stacking synthetic title generator.

#ifndef G2ST_CORPUS_HPP_
#define G2ST_CORPUS_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace g2st {

// An aligned bilingual domain term, e.g. ("一件代发", "One Piece Drop Shipping").
struct TermPair {
  std::string source;
  std::string target;
  std::optional<std::string> category;

  friend bool operator==(const TermPair&, const TermPair&) = default;
};

struct ParallelExample {
  std::string id;
  std::string source;
  std::string target;

  friend bool operator==(const ParallelExample&, const ParallelExample&) = default;
};

enum class Provenance { kSynthetic, kFile };

const char* ProvenanceName(Provenance p);

// Ordered, non-empty collection of examples with unique ids. Immutable.
class Corpus {
 public:
  Corpus(std::vector<ParallelExample> examples, Provenance provenance);

  const std::vector<ParallelExample>& examples() const { return examples_; }
  std::size_t size() const { return examples_.size(); }
  Provenance provenance() const { return provenance_; }
  const ParallelExample& operator[](std::size_t i) const { return examples_[i]; }

  std::vector<std::string> sources() const;
  std::vector<std::string> targets() const;

 private:
  std::vector<ParallelExample> examples_;
  Provenance provenance_;
};

struct WordPair {
  std::string source;
  std::string target;

  friend bool operator==(const WordPair&, const WordPair&) = default;
};

struct GeneratorSpec {
  std::vector<TermPair> term_lexicon;
  std::vector<WordPair> filler_lexicon;
  int min_stack = 2;  // keywords per title, inclusive bounds
  int max_stack = 4;
  std::uint64_t seed = 0;
  // Chance that a keyword slot is drawn from the term lexicon rather than
  // the filler lexicon.
  double term_probability = 0.5;

  void Validate() const;
  nlohmann::ordered_json ToJson() const;
  static GeneratorSpec FromJson(const nlohmann::json& doc);
};

// Invokes fn(line_number, object) for every non-blank line of a JSON Lines
// file. Returns the number of records.
using JsonLineFn = std::function<void(std::size_t, const nlohmann::json&)>;
std::size_t ForEachJsonLine(const std::filesystem::path& path, const JsonLineFn& fn);

std::vector<TermPair> LoadTermPairs(const std::filesystem::path& path);
void SaveTermPairs(std::span<const TermPair> pairs,
                   const std::filesystem::path& path);

Corpus LoadParallelCorpus(const std::filesystem::path& path);
std::string SerializeCorpus(const Corpus& corpus);
void SaveParallelCorpus(const Corpus& corpus, const std::filesystem::path& path);

GeneratorSpec LoadGeneratorSpec(const std::filesystem::path& path);

// Seeded Fisher-Yates shuffle followed by a prefix cut.
std::pair<Corpus, Corpus> SplitCorpus(const Corpus& corpus,
                                      std::size_t train_count,
                                      std::uint64_t seed);

Corpus GenerateSyntheticCorpus(const GeneratorSpec& spec, std::size_t count);

// Stage-1 data: each pair becomes one example with the bare term texts.
Corpus TermPairsAsCorpus(std::span<const TermPair> pairs);

// Builds a pseudo e-commerce lexicon. Filler words use a "general" pool of
// CJK characters; every term contains at least one character from a
// disjoint "domain" pool, so a tokenizer trained on filler-only text sees
// those characters as unknown.
GeneratorSpec SynthesizeLexicon(std::size_t term_count,
                                std::size_t filler_count, std::uint64_t seed);

// Same lexicon, but titles are stacked from fillers only.
GeneratorSpec GeneralDomainSpec(const GeneratorSpec& spec);

}  // namespace g2st

#endif  // G2ST_CORPUS_HPP_
