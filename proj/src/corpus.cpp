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

#include "g2st/corpus.hpp"

#include <algorithm>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "g2st/common.hpp"

namespace g2st {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

bool HasControlChars(std::string_view text) {
  return std::any_of(text.begin(), text.end(), [](char c) {
    const auto u = static_cast<unsigned char>(c);
    return u < 0x20 || u == 0x7F;
  });
}

}  // namespace

std::size_t ForEachJsonLine(const std::filesystem::path& path, const JsonLineFn& fn) {
  const std::string text = ReadFile(path);
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::size_t records = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (Trim(line).empty()) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": invalid JSON: " + e.what());
    }
    if (!obj.is_object()) {
      throw Error(ErrorCode::kParse, path.string() + ":" +
                                         std::to_string(line_no) +
                                         ": record is not a JSON object");
    }
    fn(line_no, obj);
    ++records;
  }
  return records;
}

namespace {

std::string RequireText(const json& obj, const char* key,
                        const std::filesystem::path& path, std::size_t line_no) {
  const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw Error(ErrorCode::kParse, where + "missing field `" + key + "`");
  }
  if (!it->is_string()) {
    throw Error(ErrorCode::kParse, where + "field `" + key + "` is not a string");
  }
  std::string value = it->get<std::string>();
  if (Trim(value).empty()) {
    throw Error(ErrorCode::kParse, where + "field `" + key + "` is empty");
  }
  return value;
}

void ValidateTermPair(const TermPair& p) {
  if (Trim(p.source).empty() || Trim(p.target).empty()) {
    throw Error(ErrorCode::kInvalidArgument, "term pair has an empty side");
  }
  if (HasControlChars(p.source) || HasControlChars(p.target)) {
    throw Error(ErrorCode::kInvalidArgument,
                "term pair contains control characters: " + p.source);
  }
}

// Fisher-Yates with a modulo draw; portable across standard libraries.
template <typename T>
void SeededShuffle(std::vector<T>& items, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(items[i - 1], items[j]);
  }
}

std::string Utf8Encode(char32_t cp) {
  std::string out;
  if (cp < 0x80) {
    out += static_cast<char>(cp);
  } else if (cp < 0x800) {
    out += static_cast<char>(0xC0 | (cp >> 6));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else if (cp < 0x10000) {
    out += static_cast<char>(0xE0 | (cp >> 12));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  } else {
    out += static_cast<char>(0xF0 | (cp >> 18));
    out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
    out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
    out += static_cast<char>(0x80 | (cp & 0x3F));
  }
  return out;
}

// English product vocabulary used for synthetic targets.
constexpr const char* kEnglishWords[] = {
    "Cat", "Dog", "Pet", "Tent", "Fence", "Cage", "House", "Puppy", "Kitten",
    "Room", "Dress", "Skirt", "Shirt", "Sweater", "Linen", "Cotton", "Silk",
    "Wool", "Knitted", "Long", "Short", "Sleeve", "Loose", "Casual", "Fashion",
    "Elegant", "Slim", "Turtleneck", "Women", "Men", "Kids", "Baby", "Infant",
    "Maternity", "Bottle", "Stroller", "Diaper", "Blanket", "Pillow", "Sofa",
    "Chair", "Table", "Lamp", "Curtain", "Carpet", "Mirror", "Shelf", "Basket",
    "Peanut", "Rice", "Tea", "Coffee", "Honey", "Chicken", "Duck", "Beef",
    "Pork", "Noodle", "Snack", "Candy", "Oil", "Sauce", "Lipstick", "Cream",
    "Serum", "Mask", "Powder", "Perfume", "Lotion", "Shampoo", "Brush", "Comb",
    "Wholesale", "Factory", "Custom", "Printed", "Fresh", "Original", "Special",
    "Price", "Style", "Japanese", "Korean", "Vintage", "Minimalist", "Summer",
    "Winter", "Spring", "Autumn", "Outdoor", "Indoor", "Portable", "Foldable",
    "Waterproof", "Warm", "Soft", "Thick", "Thin", "Large", "Small", "Mini",
    "Round", "Square", "Black", "White", "Red", "Blue", "Green", "Pink", "Gray",
    "Brown", "Gold", "Silver", "Leather", "Wooden", "Metal", "Plastic",
    "Ceramic", "Glass", "Bamboo", "Paper", "Gift", "Box", "Bag", "Backpack",
    "Wallet", "Belt", "Hat", "Scarf", "Glove", "Sock", "Shoe", "Boot",
    "Sandal", "Slipper", "Watch", "Ring", "Necklace", "Earring", "Bracelet",
    "Phone", "Case", "Charger", "Cable", "Speaker", "Headphone", "Keyboard",
    "Mouse", "Camera", "Toy", "Doll", "Puzzle", "Ball", "Kite", "Bike",
    "Helmet", "Yoga", "Fitness", "Towel", "Soap", "Cup", "Plate", "Bowl",
    "Spoon", "Knife", "Pot", "Pan", "Kettle", "Storage", "Hanger", "Hook",
    "Clip", "Sticker", "Pen", "Notebook", "Tape", "Candle", "Vase", "Flower",
    "Plant", "Seed", "Garden", "Tool", "Drill", "Screw", "Lock", "Key",
    "Drop", "Shipping", "Piece", "Equipment", "Manufacturer", "Processing",
    "Delivery", "Supplies", "Sheath", "Oversized", "Stretch", "Breathable",
};

constexpr const char* kCategories[] = {
    "clothing", "maternity", "maternal and infant", "home furnishings",
    "food", "cosmetics",
};

}  // namespace

const char* ProvenanceName(Provenance p) {
  return p == Provenance::kSynthetic ? "synthetic" : "file";
}

Corpus::Corpus(std::vector<ParallelExample> examples, Provenance provenance)
    : examples_(std::move(examples)), provenance_(provenance) {
  if (examples_.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "corpus must contain at least one example");
  }
  std::unordered_map<std::string, std::size_t> seen;
  std::set<std::string> duplicates;
  for (const auto& ex : examples_) {
    if (Trim(ex.source).empty() || Trim(ex.target).empty()) {
      throw Error(ErrorCode::kInvalidArgument,
                  "example `" + ex.id + "` has an empty source or target");
    }
    if (!seen.emplace(ex.id, 0).second) duplicates.insert(ex.id);
  }
  if (!duplicates.empty()) {
    std::string msg = "duplicate example ids:";
    for (const auto& id : duplicates) msg += " \"" + id + "\"";
    throw Error(ErrorCode::kInvalidArgument, msg);
  }
}

std::vector<std::string> Corpus::sources() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.source);
  return out;
}

std::vector<std::string> Corpus::targets() const {
  std::vector<std::string> out;
  out.reserve(examples_.size());
  for (const auto& ex : examples_) out.push_back(ex.target);
  return out;
}

void GeneratorSpec::Validate() const {
  if (min_stack < 2 || max_stack < min_stack) {
    throw Error(ErrorCode::kInvalidArgument,
                "stack_length_range must satisfy 2 <= lower <= upper");
  }
  if (term_lexicon.empty() || filler_lexicon.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "generator lexicons must be non-empty");
  }
  if (!(term_probability >= 0.0 && term_probability <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "term_probability must lie in [0, 1]");
  }
  for (const auto& t : term_lexicon) ValidateTermPair(t);
  for (const auto& w : filler_lexicon) {
    if (Trim(w.source).empty() || Trim(w.target).empty()) {
      throw Error(ErrorCode::kInvalidArgument, "filler entry has an empty side");
    }
  }
}

ordered_json GeneratorSpec::ToJson() const {
  ordered_json doc;
  ordered_json terms = ordered_json::array();
  for (const auto& t : term_lexicon) {
    ordered_json e{{"source", t.source}, {"target", t.target}};
    if (t.category) e["category"] = *t.category;
    terms.push_back(std::move(e));
  }
  ordered_json fillers = ordered_json::array();
  for (const auto& w : filler_lexicon) {
    fillers.push_back({{"source", w.source}, {"target", w.target}});
  }
  doc["term_lexicon"] = std::move(terms);
  doc["filler_lexicon"] = std::move(fillers);
  doc["stack_length_range"] = {min_stack, max_stack};
  doc["seed"] = seed;
  doc["term_probability"] = term_probability;
  return doc;
}

GeneratorSpec GeneratorSpec::FromJson(const json& doc) {
  GeneratorSpec spec;
  try {
    for (const auto& e : doc.at("term_lexicon")) {
      TermPair p{e.at("source").get<std::string>(), e.at("target").get<std::string>(),
                 std::nullopt};
      if (e.contains("category")) p.category = e.at("category").get<std::string>();
      spec.term_lexicon.push_back(std::move(p));
    }
    for (const auto& e : doc.at("filler_lexicon")) {
      if (e.is_array()) {
        spec.filler_lexicon.push_back({e.at(0).get<std::string>(), e.at(1).get<std::string>()});
      } else {
        spec.filler_lexicon.push_back(
            {e.at("source").get<std::string>(), e.at("target").get<std::string>()});
      }
    }
    const auto& range = doc.at("stack_length_range");
    spec.min_stack = range.at(0).get<int>();
    spec.max_stack = range.at(1).get<int>();
    spec.seed = doc.at("seed").get<std::uint64_t>();
    spec.term_probability = doc.value("term_probability", 0.5);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("invalid generator spec: ") + e.what());
  }
  spec.Validate();
  return spec;
}

std::vector<TermPair> LoadTermPairs(const std::filesystem::path& path) {
  std::vector<TermPair> pairs;
  const auto records = ForEachJsonLine(path, [&](std::size_t line_no, const json& obj) {
    TermPair p{RequireText(obj, "source", path, line_no),
               RequireText(obj, "target", path, line_no), std::nullopt};
    if (auto it = obj.find("category"); it != obj.end() && !it->is_null()) {
      if (!it->is_string()) {
        throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                           ": field `category` is not a string");
      }
      p.category = it->get<std::string>();
    }
    if (HasControlChars(p.source) || HasControlChars(p.target)) {
      throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                         ": control characters in term pair");
    }
    pairs.push_back(std::move(p));
  });
  if (records == 0) {
    throw Error(ErrorCode::kParse, "term pair file is empty: " + path.string());
  }
  return pairs;
}

void SaveTermPairs(std::span<const TermPair> pairs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : pairs) {
    ordered_json obj{{"source", p.source}, {"target", p.target}};
    if (p.category) obj["category"] = *p.category;
    out += obj.dump() + "\n";
  }
  WriteFile(path, out);
}

Corpus LoadParallelCorpus(const std::filesystem::path& path) {
  std::vector<ParallelExample> examples;
  std::unordered_map<std::string, std::size_t> first_line;
  std::map<std::string, std::vector<std::size_t>> duplicate_lines;
  const auto records = ForEachJsonLine(path, [&](std::size_t line_no, const json& obj) {
    ParallelExample ex;
    if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
      if (it->is_string()) {
        ex.id = it->get<std::string>();
      } else if (it->is_number_integer()) {
        ex.id = std::to_string(it->get<long long>());
      } else {
        throw Error(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) +
                                           ": field `id` must be a string or integer");
      }
    } else {
      ex.id = std::to_string(line_no);
    }
    ex.source = RequireText(obj, "source", path, line_no);
    ex.target = RequireText(obj, "target", path, line_no);
    auto [it, inserted] = first_line.emplace(ex.id, line_no);
    if (!inserted) {
      auto& lines = duplicate_lines[ex.id];
      if (lines.empty()) lines.push_back(it->second);
      lines.push_back(line_no);
    }
    examples.push_back(std::move(ex));
  });
  if (records == 0) {
    throw Error(ErrorCode::kParse, "parallel corpus file is empty: " + path.string());
  }
  if (!duplicate_lines.empty()) {
    std::string msg = path.string() + ": duplicate ids:";
    for (const auto& [id, lines] : duplicate_lines) {
      msg += " \"" + id + "\" (lines";
      for (auto l : lines) msg += " " + std::to_string(l);
      msg += ")";
    }
    throw Error(ErrorCode::kParse, msg);
  }
  return Corpus(std::move(examples), Provenance::kFile);
}

std::string SerializeCorpus(const Corpus& corpus) {
  std::string out;
  for (const auto& ex : corpus.examples()) {
    ordered_json obj{{"id", ex.id}, {"source", ex.source}, {"target", ex.target}};
    out += obj.dump() + "\n";
  }
  return out;
}

void SaveParallelCorpus(const Corpus& corpus, const std::filesystem::path& path) {
  WriteFile(path, SerializeCorpus(corpus));
}

GeneratorSpec LoadGeneratorSpec(const std::filesystem::path& path) {
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kParse, path.string() + ": " + e.what());
  }
  return GeneratorSpec::FromJson(doc);
}

std::pair<Corpus, Corpus> SplitCorpus(const Corpus& corpus, std::size_t train_count,
                                      std::uint64_t seed) {
  if (train_count == 0 || train_count >= corpus.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "train_count must satisfy 0 < train_count < " +
                    std::to_string(corpus.size()) + ", got " + std::to_string(train_count));
  }
  std::vector<ParallelExample> shuffled = corpus.examples();
  SeededShuffle(shuffled, seed);
  std::vector<ParallelExample> test(shuffled.begin() + static_cast<std::ptrdiff_t>(train_count),
                                    shuffled.end());
  shuffled.resize(train_count);
  return {Corpus(std::move(shuffled), corpus.provenance()),
          Corpus(std::move(test), corpus.provenance())};
}

Corpus GenerateSyntheticCorpus(const GeneratorSpec& spec, std::size_t count) {
  if (count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "synthetic corpus count must be >= 1");
  }
  spec.Validate();
  std::mt19937_64 rng(spec.seed);
  const auto span = static_cast<std::uint64_t>(spec.max_stack - spec.min_stack + 1);
  const int width = std::max<int>(6, static_cast<int>(std::to_string(count).size()));
  std::vector<ParallelExample> examples;
  examples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    const int k = spec.min_stack + static_cast<int>(rng() % span);
    std::string source;
    std::string target;
    for (int slot = 0; slot < k; ++slot) {
      const bool use_term = UnitFromBits(rng()) < spec.term_probability;
      const std::string* src;
      const std::string* tgt;
      if (use_term) {
        const auto& t = spec.term_lexicon[rng() % spec.term_lexicon.size()];
        src = &t.source;
        tgt = &t.target;
      } else {
        const auto& w = spec.filler_lexicon[rng() % spec.filler_lexicon.size()];
        src = &w.source;
        tgt = &w.target;
      }
      if (slot > 0) {
        source += ' ';
        target += ' ';
      }
      source += *src;
      target += *tgt;
    }
    std::string id = std::to_string(i + 1);
    id = "syn-" + std::string(static_cast<std::size_t>(std::max(0, width - static_cast<int>(id.size()))), '0') + id;
    examples.push_back({std::move(id), std::move(source), std::move(target)});
  }
  return Corpus(std::move(examples), Provenance::kSynthetic);
}

Corpus TermPairsAsCorpus(std::span<const TermPair> pairs) {
  if (pairs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "term pair list is empty");
  }
  std::vector<ParallelExample> examples;
  examples.reserve(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ValidateTermPair(pairs[i]);
    examples.push_back({"tp-" + std::to_string(i + 1), pairs[i].source, pairs[i].target});
  }
  return Corpus(std::move(examples), Provenance::kFile);
}

GeneratorSpec SynthesizeLexicon(std::size_t term_count, std::size_t filler_count,
                                std::uint64_t seed) {
  constexpr std::size_t kWordCount = std::size(kEnglishWords);
  if (term_count == 0 || filler_count == 0) {
    throw Error(ErrorCode::kInvalidArgument, "lexicon sizes must be >= 1");
  }
  if (filler_count > kWordCount) {
    throw Error(ErrorCode::kInvalidArgument,
                "at most " + std::to_string(kWordCount) + " filler words are available");
  }
  std::mt19937_64 rng(seed);

  // Character pools: general chars from U+4E00.., domain chars from U+7000..
  const std::size_t general_pool = std::max<std::size_t>(16, filler_count * 2 / 3);
  const std::size_t domain_pool = std::max<std::size_t>(16, term_count / 2);
  std::vector<std::string> general_chars;
  std::vector<std::string> domain_chars;
  for (std::size_t i = 0; i < general_pool; ++i) general_chars.push_back(Utf8Encode(0x4E00 + 3 * i));
  for (std::size_t i = 0; i < domain_pool; ++i) domain_chars.push_back(Utf8Encode(0x7000 + 3 * i));

  std::vector<std::string> words(std::begin(kEnglishWords), std::end(kEnglishWords));
  SeededShuffle(words, MixSeed(seed, 1));

  GeneratorSpec spec;
  spec.seed = seed;
  std::unordered_set<std::string> used_sources;
  for (std::size_t i = 0; i < filler_count; ++i) {
    std::string src;
    do {
      src = general_chars[rng() % general_chars.size()] + general_chars[rng() % general_chars.size()];
    } while (!used_sources.insert(src).second);
    spec.filler_lexicon.push_back({std::move(src), words[i]});
  }

  std::unordered_set<std::string> used_targets;
  const std::size_t max_terms = kWordCount * kWordCount;
  if (term_count > max_terms / 2) {
    throw Error(ErrorCode::kInvalidArgument, "term_count too large for the word pool");
  }
  for (std::size_t i = 0; i < term_count; ++i) {
    std::string src;
    do {
      const int len = 2 + static_cast<int>(rng() % 2);
      const int forced = static_cast<int>(rng() % static_cast<std::uint64_t>(len));
      src.clear();
      for (int c = 0; c < len; ++c) {
        const bool domain = c == forced || UnitFromBits(rng()) < 0.5;
        const auto& pool = domain ? domain_chars : general_chars;
        src += pool[rng() % pool.size()];
      }
    } while (!used_sources.insert(src).second);
    std::string tgt;
    do {
      const int n_words = 1 + static_cast<int>(rng() % 2);
      tgt.clear();
      for (int w = 0; w < n_words; ++w) {
        if (w > 0) tgt += ' ';
        tgt += words[rng() % kWordCount];
      }
    } while (!used_targets.insert(tgt).second);
    spec.term_lexicon.push_back(
        {std::move(src), std::move(tgt), std::string(kCategories[i % std::size(kCategories)])});
  }
  return spec;
}

GeneratorSpec GeneralDomainSpec(const GeneratorSpec& spec) {
  GeneratorSpec general = spec;
  general.term_probability = 0.0;
  general.seed = MixSeed(spec.seed, 0x6e6c);
  return general;
}

}  // namespace g2st
