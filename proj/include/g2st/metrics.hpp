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

// Corpus BLEU with SacreBLEU semantics (13a tokenization, case-sensitive,
// exponential smoothing, single reference) and ROUGE-1/2/L F-measures.

#ifndef G2ST_METRICS_HPP_
#define G2ST_METRICS_HPP_

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace g2st {

std::vector<std::string> Tokenize13a(std::string_view text);

struct BleuReport {
  double score = 0.0;                    // 0..100
  std::array<double, 4> precisions{};    // 0..1, smoothed
  double brevity_penalty = 0.0;
  std::size_t hyp_len = 0;
  std::size_t ref_len = 0;
  std::array<std::size_t, 4> matches{};  // clipped n-gram matches
  std::array<std::size_t, 4> totals{};   // hypothesis n-gram counts
};

BleuReport CorpusBleu(std::span<const std::string> hypotheses,
                      std::span<const std::string> references);

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// Token-level forms; the text forms tokenize with 13a and lowercase first.
Prf RougeNTokens(std::span<const std::string> hyp, std::span<const std::string> ref, int n);
Prf RougeLTokens(std::span<const std::string> hyp, std::span<const std::string> ref);
Prf RougeN(std::string_view hypothesis, std::string_view reference, int n);
Prf RougeL(std::string_view hypothesis, std::string_view reference);

std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b);

struct EvaluationReport {
  BleuReport bleu;
  double rouge1 = 0.0;  // mean per-example F1, 0..100
  double rouge2 = 0.0;
  double rougeL = 0.0;

  // Keys in the column order sacrebleu, rouge1, rouge2, rougeL.
  nlohmann::ordered_json ToJson() const;
  // "SacreBLEU Rouge-1 Rouge-2 Rouge-L" header and values to two decimals.
  std::string Table() const;
};

EvaluationReport EvaluateCorpus(std::span<const std::string> hypotheses,
                                std::span<const std::string> references);

}  // namespace g2st

#endif  // G2ST_METRICS_HPP_
