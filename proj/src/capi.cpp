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

#include "g2st/g2st.h"

#include <algorithm>
#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <new>
#include <string>
#include <utility>
#include <vector>

#include "g2st/common.hpp"
#include "g2st/corpus.hpp"
#include "g2st/metrics.hpp"
#include "g2st/model.hpp"
#include "g2st/runner.hpp"
#include "g2st/tokenizer.hpp"
#include "json.hpp"

struct g2st_corpus {
  g2st::Corpus value;
};

struct g2st_tokenizer {
  g2st::Tokenizer value;
};

struct g2st_model {
  g2st::ModelParameters value;
};

namespace {

using nlohmann::json;

thread_local std::string last_error;

g2st_status Fail(g2st_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

g2st_status FromCode(g2st::ErrorCode code) {
  switch (code) {
    case g2st::ErrorCode::kInvalidArgument: return G2ST_ERR_INVALID_ARGUMENT;
    case g2st::ErrorCode::kConfig: return G2ST_ERR_CONFIG;
    case g2st::ErrorCode::kIo: return G2ST_ERR_IO;
    case g2st::ErrorCode::kParse: return G2ST_ERR_PARSE;
    case g2st::ErrorCode::kOutOfRange: return G2ST_ERR_OUT_OF_RANGE;
    case g2st::ErrorCode::kNumeric: return G2ST_ERR_NUMERIC;
  }
  return G2ST_ERR_INTERNAL;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
g2st_status Guard(Fn&& fn) {
  try {
    fn();
    return G2ST_OK;
  } catch (const g2st::Error& e) {
    return Fail(FromCode(e.code()), e.what());
  } catch (const json::exception& e) {
    return Fail(G2ST_ERR_PARSE, e.what());
  } catch (const std::bad_alloc&) {
    return Fail(G2ST_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return Fail(G2ST_ERR_INTERNAL, e.what());
  } catch (...) {
    return Fail(G2ST_ERR_INTERNAL, "unknown error");
  }
}

void Require(bool ok, const char* what) {
  if (!ok) throw g2st::Error(g2st::ErrorCode::kInvalidArgument, what);
}

char* CopyString(std::string_view s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

json ParseJson(const char* text, const char* what) {
  Require(text != nullptr, what);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw g2st::Error(g2st::ErrorCode::kParse, std::string(what) + ": " + e.what());
  }
}

nlohmann::ordered_json ParseMetadata(const char* text) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(text);
  } catch (const json::exception& e) {
    throw g2st::Error(g2st::ErrorCode::kParse, std::string("metadata_json: ") + e.what());
  }
  if (!doc.is_object()) {
    throw g2st::Error(g2st::ErrorCode::kInvalidArgument, "metadata_json must be an object");
  }
  return doc;
}

g2st::RunConfig ParseRunConfig(const char* config_json) {
  json doc;
  try {
    Require(config_json != nullptr, "config_json is null");
    doc = json::parse(config_json);
  } catch (const json::exception& e) {
    throw g2st::Error(g2st::ErrorCode::kConfig, std::string("invalid config JSON: ") + e.what());
  }
  return g2st::RunConfig::FromJson(doc);
}

g2st::ProgressFn Progress(g2st_progress_fn fn, void* user_data) {
  if (!fn) return {};
  return [fn, user_data](const std::string& message) { fn(message.c_str(), user_data); };
}

std::vector<std::string> Strings(const char* const* items, size_t count, const char* what) {
  Require(count == 0 || items != nullptr, what);
  std::vector<std::string> out;
  out.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    Require(items[i] != nullptr, what);
    out.emplace_back(items[i]);
  }
  return out;
}

}  // namespace

extern "C" {

const char* g2st_version(void) { return "0.1.0"; }

const char* g2st_status_name(g2st_status status) {
  switch (status) {
    case G2ST_OK: return "ok";
    case G2ST_ERR_INVALID_ARGUMENT: return "invalid argument";
    case G2ST_ERR_CONFIG: return "config error";
    case G2ST_ERR_IO: return "i/o error";
    case G2ST_ERR_PARSE: return "parse error";
    case G2ST_ERR_OUT_OF_RANGE: return "out of range";
    case G2ST_ERR_NUMERIC: return "numeric error";
    case G2ST_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* g2st_last_error(void) { return last_error.c_str(); }

void g2st_string_free(char* s) { std::free(s); }

void g2st_ids_free(int32_t* ids) { std::free(ids); }

g2st_status g2st_fingerprint(const char* text, char** hex_out) {
  return Guard([&] {
    Require(text && hex_out, "arguments must be non-null");
    *hex_out = CopyString(g2st::Hex64(g2st::Fnv1a64(text)));
  });
}

g2st_status g2st_corpus_load(const char* path, g2st_corpus** out) {
  return Guard([&] {
    Require(path && out, "path and out must be non-null");
    *out = new g2st_corpus{g2st::LoadParallelCorpus(path)};
  });
}

g2st_status g2st_corpus_load_term_pairs(const char* path, g2st_corpus** out) {
  return Guard([&] {
    Require(path && out, "path and out must be non-null");
    *out = new g2st_corpus{g2st::TermPairsAsCorpus(g2st::LoadTermPairs(path))};
  });
}

g2st_status g2st_corpus_generate(const char* spec_json, size_t count, g2st_corpus** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    const auto spec = g2st::GeneratorSpec::FromJson(ParseJson(spec_json, "spec_json"));
    *out = new g2st_corpus{g2st::GenerateSyntheticCorpus(spec, count)};
  });
}

g2st_status g2st_corpus_split(const g2st_corpus* corpus, size_t train_count, uint64_t seed,
                              g2st_corpus** train_out, g2st_corpus** test_out) {
  return Guard([&] {
    Require(corpus && train_out && test_out, "corpus and outputs must be non-null");
    auto [train, test] = g2st::SplitCorpus(corpus->value, train_count, seed);
    auto a = std::make_unique<g2st_corpus>(g2st_corpus{std::move(train)});
    *test_out = new g2st_corpus{std::move(test)};
    *train_out = a.release();
  });
}

g2st_status g2st_corpus_save(const g2st_corpus* corpus, const char* path) {
  return Guard([&] {
    Require(corpus && path, "corpus and path must be non-null");
    g2st::SaveParallelCorpus(corpus->value, path);
  });
}

size_t g2st_corpus_size(const g2st_corpus* corpus) { return corpus ? corpus->value.size() : 0; }

g2st_status g2st_corpus_get(const g2st_corpus* corpus, size_t index, const char** id,
                            const char** source, const char** target) {
  return Guard([&] {
    Require(corpus != nullptr, "corpus is null");
    if (index >= corpus->value.size()) {
      throw g2st::Error(g2st::ErrorCode::kOutOfRange,
                        "index " + std::to_string(index) + " outside corpus of " +
                            std::to_string(corpus->value.size()));
    }
    const auto& ex = corpus->value[index];
    if (id) *id = ex.id.c_str();
    if (source) *source = ex.source.c_str();
    if (target) *target = ex.target.c_str();
  });
}

void g2st_corpus_free(g2st_corpus* corpus) { delete corpus; }

g2st_status g2st_lexicon_synthesize(size_t term_count, size_t filler_count, uint64_t seed,
                                    char** spec_json_out) {
  return Guard([&] {
    Require(spec_json_out != nullptr, "spec_json_out is null");
    *spec_json_out =
        CopyString(g2st::SynthesizeLexicon(term_count, filler_count, seed).ToJson().dump(1));
  });
}

g2st_status g2st_spec_general(const char* spec_json, char** spec_json_out) {
  return Guard([&] {
    Require(spec_json_out != nullptr, "spec_json_out is null");
    const auto spec = g2st::GeneratorSpec::FromJson(ParseJson(spec_json, "spec_json"));
    *spec_json_out = CopyString(g2st::GeneralDomainSpec(spec).ToJson().dump(1));
  });
}

g2st_status g2st_spec_save_term_pairs(const char* spec_json, const char* path) {
  return Guard([&] {
    Require(path != nullptr, "path is null");
    const auto spec = g2st::GeneratorSpec::FromJson(ParseJson(spec_json, "spec_json"));
    g2st::SaveTermPairs(spec.term_lexicon, path);
  });
}

g2st_status g2st_tokenizer_train(const g2st_corpus* corpus, size_t vocab_size,
                                 g2st_tokenizer** out) {
  return Guard([&] {
    Require(corpus && out, "corpus and out must be non-null");
    std::vector<std::string> texts = corpus->value.sources();
    for (auto& t : corpus->value.targets()) texts.push_back(std::move(t));
    *out = new g2st_tokenizer{g2st::Tokenizer::Train(texts, vocab_size)};
  });
}

g2st_status g2st_tokenizer_train_texts(const char* const* texts, size_t count,
                                       size_t vocab_size, g2st_tokenizer** out) {
  return Guard([&] {
    Require(out != nullptr, "out is null");
    const auto items = Strings(texts, count, "texts contains a null entry");
    *out = new g2st_tokenizer{g2st::Tokenizer::Train(items, vocab_size)};
  });
}

g2st_status g2st_tokenizer_load(const char* path, g2st_tokenizer** out) {
  return Guard([&] {
    Require(path && out, "path and out must be non-null");
    *out = new g2st_tokenizer{g2st::Tokenizer::Load(path)};
  });
}

g2st_status g2st_tokenizer_save(const g2st_tokenizer* tok, const char* path,
                                const char* metadata_json) {
  return Guard([&] {
    Require(tok && path, "tokenizer and path must be non-null");
    if (metadata_json) {
      tok->value.Save(path, ParseMetadata(metadata_json));
    } else {
      tok->value.Save(path);
    }
  });
}

size_t g2st_tokenizer_vocab_size(const g2st_tokenizer* tok) {
  return tok ? tok->value.vocab_size() : 0;
}

g2st_status g2st_tokenizer_expand(const g2st_tokenizer* tok, const char* const* chars,
                                  size_t count, g2st_tokenizer** out) {
  return Guard([&] {
    Require(tok && out, "tokenizer and out must be non-null");
    const auto items = Strings(chars, count, "chars contains a null entry");
    *out = new g2st_tokenizer{tok->value.Expand(items)};
  });
}

g2st_status g2st_tokenizer_expand_file(const g2st_tokenizer* tok, const char* path,
                                       g2st_tokenizer** out) {
  return Guard([&] {
    Require(tok && path && out, "arguments must be non-null");
    *out = new g2st_tokenizer{tok->value.Expand(g2st::LoadExpansionList(path))};
  });
}

g2st_status g2st_tokenizer_expand_corpus(const g2st_tokenizer* tok, const g2st_corpus* corpus,
                                         g2st_tokenizer** out) {
  return Guard([&] {
    Require(tok && corpus && out, "tokenizer, corpus and out must be non-null");
    std::vector<std::string> texts = corpus->value.sources();
    for (auto& t : corpus->value.targets()) texts.push_back(std::move(t));
    *out = new g2st_tokenizer{tok->value.Expand(g2st::CharacterSet(texts))};
  });
}

g2st_status g2st_tokenizer_encode(const g2st_tokenizer* tok, const char* text,
                                  int32_t** ids_out, size_t* count_out) {
  return Guard([&] {
    Require(tok && text && ids_out && count_out, "arguments must be non-null");
    const auto ids = tok->value.Encode(text);
    auto* buf = static_cast<int32_t*>(std::malloc(std::max<size_t>(1, ids.size()) * sizeof(int32_t)));
    if (!buf) throw std::bad_alloc();
    std::copy(ids.begin(), ids.end(), buf);
    *ids_out = buf;
    *count_out = ids.size();
  });
}

g2st_status g2st_tokenizer_decode(const g2st_tokenizer* tok, const int32_t* ids, size_t count,
                                  char** text_out) {
  return Guard([&] {
    Require(tok && text_out && (ids || count == 0), "arguments must be non-null");
    std::vector<g2st::TokenId> v(ids, ids + count);
    *text_out = CopyString(tok->value.Decode(v));
  });
}

g2st_status g2st_tokenizer_oov(const g2st_tokenizer* tok, const g2st_corpus* corpus,
                               char** report_json_out) {
  return Guard([&] {
    Require(tok && corpus && report_json_out, "arguments must be non-null");
    const auto r = tok->value.Oov(corpus->value.sources());
    nlohmann::ordered_json doc{{"total_symbols", r.total_symbols},
                               {"unk_symbols", r.unk_symbols},
                               {"rate", r.rate},
                               {"sample_unknowns", r.sample_unknowns}};
    *report_json_out = CopyString(doc.dump());
  });
}

void g2st_tokenizer_free(g2st_tokenizer* tok) { delete tok; }

g2st_status g2st_model_load(const char* path, g2st_model** out) {
  return Guard([&] {
    Require(path && out, "path and out must be non-null");
    *out = new g2st_model{g2st::LoadCheckpoint(path)};
  });
}

g2st_status g2st_model_save(const g2st_model* model, const char* path,
                            const char* metadata_json) {
  return Guard([&] {
    Require(model && path, "model and path must be non-null");
    const auto meta =
        metadata_json ? ParseMetadata(metadata_json) : nlohmann::ordered_json::object();
    g2st::SaveCheckpoint(model->value, path, meta);
  });
}

size_t g2st_model_vocab_size(const g2st_model* model) {
  return model ? static_cast<size_t>(model->value.config().vocab_size) : 0;
}

g2st_status g2st_model_resize(const g2st_model* model, size_t vocab_size,
                              g2st_embedding_init init, uint64_t seed, g2st_model** out) {
  return Guard([&] {
    Require(model && out, "model and out must be non-null");
    Require(init == G2ST_INIT_MEAN || init == G2ST_INIT_RANDOM, "unknown embedding init");
    Require(vocab_size <= 0x7fffffff, "vocab_size too large");
    const auto strategy = init == G2ST_INIT_MEAN ? g2st::EmbeddingInit::kMean
                                                 : g2st::EmbeddingInit::kRandom;
    *out = new g2st_model{
        g2st::ResizeEmbeddings(model->value, static_cast<int>(vocab_size), strategy, seed)};
  });
}

g2st_status g2st_model_translate(const g2st_model* model, const g2st_tokenizer* tok,
                                 const char* source, size_t max_len, char** text_out) {
  return Guard([&] {
    Require(model && tok && source && text_out, "arguments must be non-null");
    g2st::CheckVocabMatch(model->value, tok->value);
    *text_out = CopyString(g2st::TranslateAll(model->value, tok->value, {source}, max_len)[0]);
  });
}

void g2st_model_free(g2st_model* model) { delete model; }

g2st_status g2st_pipeline_run(const char* config_json, g2st_progress_fn progress,
                              void* user_data, char** report_json_out) {
  return Guard([&] {
    const auto report = g2st::RunPipeline(ParseRunConfig(config_json), Progress(progress, user_data));
    if (report_json_out) *report_json_out = CopyString(report.dump(2));
  });
}

g2st_status g2st_pipeline_ablate(const char* config_json, g2st_progress_fn progress,
                                 void* user_data, char** summary_json_out) {
  return Guard([&] {
    const auto summary = g2st::RunAblation(ParseRunConfig(config_json), Progress(progress, user_data));
    if (summary_json_out) *summary_json_out = CopyString(summary.dump(2));
  });
}

g2st_status g2st_config_normalize(const char* config_json, char** normalized_json_out,
                                  char** hash_out) {
  return Guard([&] {
    const auto config = ParseRunConfig(config_json);
    std::string normalized = config.ToJson().dump(2);
    std::string hash = config.Hash();
    char* a = normalized_json_out ? CopyString(normalized) : nullptr;
    char* b = nullptr;
    try {
      b = hash_out ? CopyString(hash) : nullptr;
    } catch (...) {
      std::free(a);
      throw;
    }
    if (normalized_json_out) *normalized_json_out = a;
    if (hash_out) *hash_out = b;
  });
}

g2st_status g2st_translate_file(const char* checkpoint_path, const char* tokenizer_path,
                                const char* input_path, const char* output_path, size_t max_len,
                                size_t* count_out) {
  return Guard([&] {
    Require(checkpoint_path && tokenizer_path && input_path && output_path,
            "paths must be non-null");
    const auto n = g2st::TranslateFile(checkpoint_path, tokenizer_path, input_path, output_path, max_len);
    if (count_out) *count_out = n;
  });
}

g2st_status g2st_evaluate(const char* const* hypotheses, const char* const* references,
                          size_t count, char** report_json_out) {
  return Guard([&] {
    Require(report_json_out != nullptr, "report_json_out is null");
    const auto hyps = Strings(hypotheses, count, "hypotheses contains a null entry");
    const auto refs = Strings(references, count, "references contains a null entry");
    *report_json_out = CopyString(g2st::EvaluateCorpus(hyps, refs).ToJson().dump(2));
  });
}

g2st_status g2st_evaluate_files(const char* hypotheses_path, const char* references_path,
                                char** report_json_out) {
  return Guard([&] {
    Require(hypotheses_path && references_path && report_json_out, "arguments must be non-null");
    *report_json_out =
        CopyString(g2st::EvaluateFiles(hypotheses_path, references_path).ToJson().dump(2));
  });
}

}  // extern "C"
