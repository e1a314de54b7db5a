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

#include "g2st/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "g2st/common.hpp"

namespace g2st {
namespace {

bool IsDigit(char c) { return c >= '0' && c <= '9'; }

// Characters of the 13a punctuation class: {|}~ [\]^_` space-& ()*+ :-@ /
bool IsPunct13a(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '{' && u <= '~') || (u >= '[' && u <= '`') || (u >= ' ' && u <= '&') ||
         (u >= '(' && u <= '+') || (u >= ':' && u <= '@') || u == '/';
}

void ReplaceAll(std::string& s, std::string_view from, std::string_view to) {
  for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) {
    s.replace(pos, from.size(), to);
  }
}

using NgramCounts = std::unordered_map<std::string, std::size_t>;

NgramCounts CountNgrams(std::span<const std::string> tokens, int n) {
  NgramCounts counts;
  if (tokens.size() < static_cast<std::size_t>(n)) return counts;
  for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
    std::string key = tokens[i];
    for (int k = 1; k < n; ++k) {
      key += '\x1f';
      key += tokens[i + static_cast<std::size_t>(k)];
    }
    ++counts[key];
  }
  return counts;
}

std::size_t ClippedOverlap(const NgramCounts& hyp, const NgramCounts& ref) {
  std::size_t overlap = 0;
  for (const auto& [gram, count] : hyp) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  return overlap;
}

Prf MakePrf(std::size_t overlap, std::size_t hyp_count, std::size_t ref_count) {
  Prf out;
  out.precision = hyp_count ? static_cast<double>(overlap) / static_cast<double>(hyp_count) : 0.0;
  out.recall = ref_count ? static_cast<double>(overlap) / static_cast<double>(ref_count) : 0.0;
  const double denom = out.precision + out.recall;
  out.f1 = denom > 0.0 ? 2.0 * out.precision * out.recall / denom : 0.0;
  return out;
}

std::vector<std::string> RougeTokens(std::string_view text) {
  auto tokens = Tokenize13a(text);
  for (auto& t : tokens) {
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
      return static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c);
    });
  }
  return tokens;
}

}  // namespace

std::vector<std::string> Tokenize13a(std::string_view text) {
  std::string line = " " + std::string(text) + " ";
  ReplaceAll(line, "<skipped>", "");
  ReplaceAll(line, "-\n", "");
  std::replace(line.begin(), line.end(), '\n', ' ');
  if (line.find('&') != std::string::npos) {
    ReplaceAll(line, "&quot;", "\"");
    ReplaceAll(line, "&amp;", "&");
    ReplaceAll(line, "&lt;", "<");
    ReplaceAll(line, "&gt;", ">");
  }

  // Each pass mirrors one regex substitution, scanning left to right over
  // non-overlapping matches.
  std::string a;
  for (char c : line) {
    if (IsPunct13a(c)) {
      a += ' ';
      a += c;
      a += ' ';
    } else {
      a += c;
    }
  }
  std::string b;  // ([^0-9])([\.,]) -> \1 \2 space
  for (std::size_t i = 0; i < a.size();) {
    if (i + 1 < a.size() && !IsDigit(a[i]) && (a[i + 1] == '.' || a[i + 1] == ',')) {
      b += a[i];
      b += ' ';
      b += a[i + 1];
      b += ' ';
      i += 2;
    } else {
      b += a[i++];
    }
  }
  std::string c;  // ([\.,])([^0-9]) -> space \1 space \2
  for (std::size_t i = 0; i < b.size();) {
    if (i + 1 < b.size() && (b[i] == '.' || b[i] == ',') && !IsDigit(b[i + 1])) {
      c += ' ';
      c += b[i];
      c += ' ';
      c += b[i + 1];
      i += 2;
    } else {
      c += b[i++];
    }
  }
  std::string d;  // ([0-9])(-) -> \1 \2 space
  for (std::size_t i = 0; i < c.size();) {
    if (i + 1 < c.size() && IsDigit(c[i]) && c[i + 1] == '-') {
      d += c[i];
      d += ' ';
      d += '-';
      d += ' ';
      i += 2;
    } else {
      d += c[i++];
    }
  }

  std::vector<std::string> tokens;
  std::string current;
  for (char ch : d) {
    if (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\f' || ch == '\v') {
      if (!current.empty()) tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += ch;
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

BleuReport CorpusBleu(std::span<const std::string> hypotheses,
                      std::span<const std::string> references) {
  if (hypotheses.empty() || hypotheses.size() != references.size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "BLEU needs equal, non-zero numbers of hypotheses (" +
                    std::to_string(hypotheses.size()) + ") and references (" +
                    std::to_string(references.size()) + ")");
  }
  BleuReport r;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto hyp = Tokenize13a(hypotheses[i]);
    const auto ref = Tokenize13a(references[i]);
    r.hyp_len += hyp.size();
    r.ref_len += ref.size();
    for (int n = 1; n <= 4; ++n) {
      const auto hyp_counts = CountNgrams(hyp, n);
      const auto ref_counts = CountNgrams(ref, n);
      r.matches[static_cast<std::size_t>(n - 1)] += ClippedOverlap(hyp_counts, ref_counts);
      if (hyp.size() >= static_cast<std::size_t>(n)) {
        r.totals[static_cast<std::size_t>(n - 1)] += hyp.size() - static_cast<std::size_t>(n) + 1;
      }
    }
  }

  if (r.hyp_len < r.ref_len) {
    r.brevity_penalty = r.hyp_len > 0 ? std::exp(1.0 - static_cast<double>(r.ref_len) /
                                                           static_cast<double>(r.hyp_len))
                                      : 0.0;
  } else {
    r.brevity_penalty = 1.0;
  }
  // No n-gram of any order matches: score 0 without smoothing.
  if (std::all_of(r.matches.begin(), r.matches.end(), [](std::size_t m) { return m == 0; })) {
    return r;
  }

  // Exponential smoothing: the k-th zero-match order gets 1 / (2^k * total).
  double smooth = 1.0;
  for (std::size_t n = 0; n < 4; ++n) {
    if (r.totals[n] == 0) break;
    if (r.matches[n] == 0) {
      smooth *= 2.0;
      r.precisions[n] = 1.0 / (smooth * static_cast<double>(r.totals[n]));
    } else {
      r.precisions[n] = static_cast<double>(r.matches[n]) / static_cast<double>(r.totals[n]);
    }
  }
  double log_sum = 0.0;
  bool any_zero = false;
  for (double p : r.precisions) {
    if (p <= 0.0) {
      any_zero = true;
      break;
    }
    log_sum += std::log(p);
  }
  r.score = any_zero ? 0.0 : 100.0 * r.brevity_penalty * std::exp(log_sum / 4.0);
  return r;
}

Prf RougeNTokens(std::span<const std::string> hyp, std::span<const std::string> ref, int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "ROUGE-N order must be >= 1");
  const auto hyp_counts = CountNgrams(hyp, n);
  const auto ref_counts = CountNgrams(ref, n);
  const auto total = [n](std::span<const std::string> t) {
    return t.size() >= static_cast<std::size_t>(n) ? t.size() - static_cast<std::size_t>(n) + 1 : 0;
  };
  return MakePrf(ClippedOverlap(hyp_counts, ref_counts), total(hyp), total(ref));
}

std::size_t LcsLength(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0);
  std::vector<std::size_t> cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

Prf RougeLTokens(std::span<const std::string> hyp, std::span<const std::string> ref) {
  return MakePrf(LcsLength(hyp, ref), hyp.size(), ref.size());
}

Prf RougeN(std::string_view hypothesis, std::string_view reference, int n) {
  if (n != 1 && n != 2) throw Error(ErrorCode::kInvalidArgument, "ROUGE-N supports n in {1, 2}");
  return RougeNTokens(RougeTokens(hypothesis), RougeTokens(reference), n);
}

Prf RougeL(std::string_view hypothesis, std::string_view reference) {
  return RougeLTokens(RougeTokens(hypothesis), RougeTokens(reference));
}

nlohmann::ordered_json EvaluationReport::ToJson() const {
  return nlohmann::ordered_json{
      {"sacrebleu", bleu.score},
      {"rouge1", rouge1},
      {"rouge2", rouge2},
      {"rougeL", rougeL},
      {"bp", bleu.brevity_penalty},
      {"precisions", bleu.precisions},
      {"hyp_len", bleu.hyp_len},
      {"ref_len", bleu.ref_len},
      {"config",
       {{"bleu", "nrefs:1|case:mixed|eff:no|tok:13a|smooth:exp"},
        {"rouge", "tok:13a|case:lower|agg:mean-f1|scale:100"}}}};
}

std::string EvaluationReport::Table() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-10s %-8s %-8s %-8s\n%-10.2f %-8.2f %-8.2f %-8.2f\n",
                "SacreBLEU", "Rouge-1", "Rouge-2", "Rouge-L", bleu.score, rouge1, rouge2, rougeL);
  return buf;
}

EvaluationReport EvaluateCorpus(std::span<const std::string> hypotheses,
                                std::span<const std::string> references) {
  EvaluationReport out;
  out.bleu = CorpusBleu(hypotheses, references);
  double r1 = 0.0;
  double r2 = 0.0;
  double rl = 0.0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    const auto hyp = RougeTokens(hypotheses[i]);
    const auto ref = RougeTokens(references[i]);
    r1 += RougeNTokens(hyp, ref, 1).f1;
    r2 += RougeNTokens(hyp, ref, 2).f1;
    rl += RougeLTokens(hyp, ref).f1;
  }
  const auto n = static_cast<double>(hypotheses.size());
  out.rouge1 = 100.0 * r1 / n;
  out.rouge2 = 100.0 * r2 / n;
  out.rougeL = 100.0 * rl / n;
  return out;
}

}  // namespace g2st
