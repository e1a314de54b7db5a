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

#include <map>
#include <random>
#include <string>
#include <vector>

#include "doctest.h"
#include "g2st/common.hpp"
#include "g2st/corpus.hpp"
#include "g2st/tokenizer.hpp"
#include "test_util.hpp"

using g2st::Tokenizer;
using g2st::TokenId;

namespace {

// Counts adjacent symbol pairs of a character-split corpus, for checking
// the first merge independently of the trainer.
std::map<std::pair<std::string, std::string>, int> PairCounts(const std::vector<std::string>& texts) {
  std::map<std::pair<std::string, std::string>, int> counts;
  for (const auto& t : texts) {
    for (auto chunk : g2st::SplitChunks(t)) {
      const auto chars = g2st::Utf8Chars(chunk);
      for (std::size_t i = 0; i + 1 < chars.size(); ++i) ++counts[{chars[i], chars[i + 1]}];
    }
  }
  return counts;
}

}  // namespace

TEST_SUITE("tokenizer") {
  TEST_CASE("first merge is the most frequent pair") {
    const std::vector<std::string> texts = {"aaab", "aaab"};
    const auto tok = Tokenizer::Train(texts, 100);
    REQUIRE_FALSE(tok.merges().empty());
    CHECK(tok.merges()[0] == std::pair<std::string, std::string>("a", "a"));
    // Oracle: ("a","a") occurs 4 times, ("a","b") twice.
    const auto counts = PairCounts(texts);
    CHECK(counts.at({"a", "a"}) == 4);
    CHECK(counts.at({"a", "b"}) == 2);
  }

  TEST_CASE("single character corpus has no merges") {
    const std::vector<std::string> texts = {"x"};
    const auto tok = Tokenizer::Train(texts, 10);
    CHECK(tok.vocab_size() == 5);
    CHECK(tok.merges().empty());
    CHECK(tok.token(4) == "x");
  }

  TEST_CASE("ties break toward the lexicographically smaller pair") {
    const std::vector<std::string> texts = {"cd", "ab", "cd", "ab"};
    const auto a = Tokenizer::Train(texts, 100);
    const auto b = Tokenizer::Train(texts, 100);
    REQUIRE(a.merges().size() >= 2);
    CHECK(a.merges()[0] == std::pair<std::string, std::string>("a", "b"));
    CHECK(a.merges()[1] == std::pair<std::string, std::string>("c", "d"));
    CHECK(a.Serialize() == b.Serialize());
  }

  TEST_CASE("training rejects empty input and tiny targets") {
    CHECK_THROWS_AS(Tokenizer::Train(std::vector<std::string>{}, 100), g2st::Error);
    const std::vector<std::string> texts = {"abc"};
    CHECK_THROWS_AS(Tokenizer::Train(texts, 7), g2st::Error);
  }

  TEST_CASE("specials occupy ids 0..3") {
    const std::vector<std::string> texts = {"hello world"};
    const auto tok = Tokenizer::Train(texts, 30);
    CHECK(tok.token(Tokenizer::kUnk) == "<unk>");
    CHECK(tok.token(Tokenizer::kBos) == "<s>");
    CHECK(tok.token(Tokenizer::kEos) == "</s>");
    CHECK(tok.token(Tokenizer::kPad) == "<pad>");
  }

  TEST_CASE("encode and decode round trip on known characters") {
    const auto spec = g2st::SynthesizeLexicon(40, 40, 2);
    const auto corpus = g2st::GenerateSyntheticCorpus(spec, 200);
    std::vector<std::string> texts = corpus.sources();
    for (auto& t : corpus.targets()) texts.push_back(t);
    const auto tok = Tokenizer::Train(texts, 400);
    for (const auto& t : texts) CHECK(tok.Decode(tok.Encode(t)) == t);
    CHECK(tok.Encode("").empty());
  }

  TEST_CASE("unknown characters map to unk in place") {
    const std::vector<std::string> texts = {"abab"};
    const auto tok = Tokenizer::Train(texts, 20);
    const auto ids = tok.Encode("a猫b");
    REQUIRE(ids.size() == 3);
    CHECK(ids[1] == Tokenizer::kUnk);
    CHECK(tok.Decode(ids) == "a⟨unk⟩b");
    const std::vector<TokenId> unk = {Tokenizer::kUnk};
    CHECK(tok.Decode(unk) == "⟨unk⟩");
    const std::vector<TokenId> bad = {static_cast<TokenId>(tok.vocab_size() + 5)};
    try {
      tok.Decode(bad);
      FAIL("expected an error");
    } catch (const g2st::Error& e) {
      CHECK(e.code() == g2st::ErrorCode::kOutOfRange);
    }
  }

  TEST_CASE("encode never fails on arbitrary bytes") {
    const std::vector<std::string> texts = {"abc def"};
    const auto tok = Tokenizer::Train(texts, 20);
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; ++i) {
      std::string s;
      for (int j = 0; j < 12; ++j) s.push_back(static_cast<char>(rng() & 0xff));
      CHECK_NOTHROW(tok.Encode(s));
    }
  }

  TEST_CASE("expansion appends characters and keeps every old id") {
    const std::vector<std::string> texts = {"abab cdcd"};
    const auto tok = Tokenizer::Train(texts, 30);
    const std::vector<std::string> same = {"a"};
    CHECK(tok.Expand(same) == tok);

    const std::vector<std::string> fresh = {"猫", "狗", "鸡"};
    const auto big = tok.Expand(fresh);
    CHECK(big.vocab_size() == tok.vocab_size() + 3);
    for (std::size_t i = 0; i < tok.vocab_size(); ++i) {
      CHECK(big.token(static_cast<TokenId>(i)) == tok.token(static_cast<TokenId>(i)));
      CHECK(big.Find(tok.token(static_cast<TokenId>(i))) == std::optional<TokenId>(static_cast<TokenId>(i)));
    }
    CHECK(big.merges() == tok.merges());
    CHECK(*big.Find("猫") == static_cast<TokenId>(tok.vocab_size()));

    const std::vector<std::string> multi = {"猫狗"};
    CHECK_THROWS_AS(tok.Expand(multi), g2st::Error);
  }

  TEST_CASE("oov report arithmetic and monotonicity") {
    const std::vector<std::string> texts = {"abcdefgh"};
    const auto tok = Tokenizer::Train(texts, 20);
    const std::vector<std::string> known = {"abc", "hg"};
    CHECK(tok.Oov(known).rate == 0.0);
    const std::vector<std::string> one = {"猫"};
    CHECK(tok.Oov(one).rate == 1.0);
    const std::vector<std::string> ten = {"abcd猫efg狗h"};
    const auto r = tok.Oov(ten);
    CHECK(r.total_symbols == 10);
    CHECK(r.unk_symbols == 2);
    CHECK(r.rate == doctest::Approx(0.2));
    CHECK(r.sample_unknowns == std::vector<std::string>{"猫", "狗"});

    const std::vector<std::string> add = {"猫"};
    const auto big = tok.Expand(add);
    CHECK(big.Oov(ten).rate <= r.rate);
    CHECK(big.Oov(ten).unk_symbols == 1);
    const std::vector<std::string> empty = {""};
    CHECK(tok.Oov(empty).rate == 0.0);
  }

  TEST_CASE("json round trip and strict loading") {
    g2st::testing::TempDir dir;
    const std::vector<std::string> texts = {"hello world", "yellow wood"};
    const auto tok = Tokenizer::Train(texts, 40).Expand(std::vector<std::string>{"猫"});
    tok.Save(dir / "tok.json");
    const auto back = Tokenizer::Load(dir / "tok.json");
    CHECK(back == tok);
    CHECK(back.Serialize() == tok.Serialize());
    tok.Save(dir / "meta.json", nlohmann::ordered_json{{"seed", 3}});
    CHECK(Tokenizer::Load(dir / "meta.json") == tok);

    auto doc = nlohmann::json::parse(tok.Serialize());
    doc["vocab"]["<unk>"] = 7;
    CHECK_THROWS_AS(Tokenizer::FromJson(doc), g2st::Error);
  }

  TEST_CASE("expansion list file") {
    g2st::testing::TempDir dir;
    g2st::testing::WriteLines(dir / "chars.txt", {"猫", "", "狗"});
    CHECK(g2st::LoadExpansionList(dir / "chars.txt") == std::vector<std::string>{"猫", "狗"});
    g2st::testing::WriteLines(dir / "bad.txt", {"猫狗"});
    CHECK_THROWS_AS(g2st::LoadExpansionList(dir / "bad.txt"), g2st::Error);
  }
}
