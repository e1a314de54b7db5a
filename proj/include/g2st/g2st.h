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

/* C interface to the g2st toolkit.
 *
 * Objects are opaque handles created by *_load / *_train / ... functions
 * and released with the matching *_free. Every fallible call returns a
 * g2st_status; on failure g2st_last_error() describes the problem for the
 * calling thread until its next failing call. Strings returned through
 * char** out-parameters are owned by the caller and released with
 * g2st_string_free. Pointers returned directly (const char*) are borrowed
 * from the handle and stay valid until it is freed.
 */

#ifndef G2ST_G2ST_H_
#define G2ST_G2ST_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(G2ST_BUILDING_LIBRARY)
#define G2ST_API __declspec(dllexport)
#else
#define G2ST_API __declspec(dllimport)
#endif
#else
#define G2ST_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum g2st_status {
  G2ST_OK = 0,
  G2ST_ERR_INVALID_ARGUMENT = 1,
  G2ST_ERR_CONFIG = 2,
  G2ST_ERR_IO = 3,
  G2ST_ERR_PARSE = 4,
  G2ST_ERR_OUT_OF_RANGE = 5,
  G2ST_ERR_NUMERIC = 6,
  G2ST_ERR_INTERNAL = 99
} g2st_status;

typedef enum g2st_embedding_init {
  G2ST_INIT_MEAN = 0,
  G2ST_INIT_RANDOM = 1
} g2st_embedding_init;

typedef struct g2st_corpus g2st_corpus;
typedef struct g2st_tokenizer g2st_tokenizer;
typedef struct g2st_model g2st_model;

/* Receives one human-readable progress line per event. */
typedef void (*g2st_progress_fn)(const char* message, void* user_data);

G2ST_API const char* g2st_version(void);
G2ST_API const char* g2st_status_name(g2st_status status);
G2ST_API const char* g2st_last_error(void);
G2ST_API void g2st_string_free(char* s);
G2ST_API void g2st_ids_free(int32_t* ids);
/* Stable 64-bit fingerprint of the bytes of text, as 16 hex digits. */
G2ST_API g2st_status g2st_fingerprint(const char* text, char** hex_out);

/* ---- corpus ---- */

/* JSON Lines with `source`, `target` and optional `id`. */
G2ST_API g2st_status g2st_corpus_load(const char* path, g2st_corpus** out);
/* Term pairs file, one example per pair. */
G2ST_API g2st_status g2st_corpus_load_term_pairs(const char* path, g2st_corpus** out);
/* spec_json mirrors the generator spec document. */
G2ST_API g2st_status g2st_corpus_generate(const char* spec_json, size_t count,
                                          g2st_corpus** out);
G2ST_API g2st_status g2st_corpus_split(const g2st_corpus* corpus, size_t train_count,
                                       uint64_t seed, g2st_corpus** train_out,
                                       g2st_corpus** test_out);
G2ST_API g2st_status g2st_corpus_save(const g2st_corpus* corpus, const char* path);
G2ST_API size_t g2st_corpus_size(const g2st_corpus* corpus);
G2ST_API g2st_status g2st_corpus_get(const g2st_corpus* corpus, size_t index, const char** id,
                                     const char** source, const char** target);
G2ST_API void g2st_corpus_free(g2st_corpus* corpus);

/* Builds a random generator spec with term_count domain terms and
 * filler_count general keywords; returns its JSON document. */
G2ST_API g2st_status g2st_lexicon_synthesize(size_t term_count, size_t filler_count,
                                             uint64_t seed, char** spec_json_out);
/* Same lexicon with term drawing disabled and a derived seed. */
G2ST_API g2st_status g2st_spec_general(const char* spec_json, char** spec_json_out);
/* Writes the spec's term lexicon as a term pairs file. */
G2ST_API g2st_status g2st_spec_save_term_pairs(const char* spec_json, const char* path);

/* ---- tokenizer ---- */

/* Trains on both sides of every example. */
G2ST_API g2st_status g2st_tokenizer_train(const g2st_corpus* corpus, size_t vocab_size,
                                          g2st_tokenizer** out);
G2ST_API g2st_status g2st_tokenizer_train_texts(const char* const* texts, size_t count,
                                                size_t vocab_size, g2st_tokenizer** out);
G2ST_API g2st_status g2st_tokenizer_load(const char* path, g2st_tokenizer** out);
/* metadata_json may be NULL. */
G2ST_API g2st_status g2st_tokenizer_save(const g2st_tokenizer* tok, const char* path,
                                         const char* metadata_json);
G2ST_API size_t g2st_tokenizer_vocab_size(const g2st_tokenizer* tok);
/* Appends the listed single characters that are not yet tokens. */
G2ST_API g2st_status g2st_tokenizer_expand(const g2st_tokenizer* tok, const char* const* chars,
                                           size_t count, g2st_tokenizer** out);
/* Appends the characters listed one per line in a UTF-8 text file. */
G2ST_API g2st_status g2st_tokenizer_expand_file(const g2st_tokenizer* tok, const char* path,
                                                g2st_tokenizer** out);
/* Appends every character found on either side of the corpus. */
G2ST_API g2st_status g2st_tokenizer_expand_corpus(const g2st_tokenizer* tok,
                                                  const g2st_corpus* corpus,
                                                  g2st_tokenizer** out);
G2ST_API g2st_status g2st_tokenizer_encode(const g2st_tokenizer* tok, const char* text,
                                           int32_t** ids_out, size_t* count_out);
G2ST_API g2st_status g2st_tokenizer_decode(const g2st_tokenizer* tok, const int32_t* ids,
                                           size_t count, char** text_out);
/* OOV statistics over the source side of the corpus, as JSON
 * {total_symbols, unk_symbols, rate, sample_unknowns}. */
G2ST_API g2st_status g2st_tokenizer_oov(const g2st_tokenizer* tok, const g2st_corpus* corpus,
                                        char** report_json_out);
G2ST_API void g2st_tokenizer_free(g2st_tokenizer* tok);

/* ---- model ---- */

G2ST_API g2st_status g2st_model_load(const char* path, g2st_model** out);
/* metadata_json may be NULL. */
G2ST_API g2st_status g2st_model_save(const g2st_model* model, const char* path,
                                     const char* metadata_json);
G2ST_API size_t g2st_model_vocab_size(const g2st_model* model);
G2ST_API g2st_status g2st_model_resize(const g2st_model* model, size_t vocab_size,
                                       g2st_embedding_init init, uint64_t seed,
                                       g2st_model** out);
G2ST_API g2st_status g2st_model_translate(const g2st_model* model, const g2st_tokenizer* tok,
                                          const char* source, size_t max_len,
                                          char** text_out);
G2ST_API void g2st_model_free(g2st_model* model);

/* ---- pipelines ---- */

/* config_json is a run config document; report_json_out may be NULL. */
G2ST_API g2st_status g2st_pipeline_run(const char* config_json, g2st_progress_fn progress,
                                       void* user_data, char** report_json_out);
/* Runs the four ablation rows A-D. */
G2ST_API g2st_status g2st_pipeline_ablate(const char* config_json, g2st_progress_fn progress,
                                          void* user_data, char** summary_json_out);
/* Canonical form of a run config with defaults filled in, and its hash. */
G2ST_API g2st_status g2st_config_normalize(const char* config_json, char** normalized_json_out,
                                           char** hash_out);

G2ST_API g2st_status g2st_translate_file(const char* checkpoint_path,
                                         const char* tokenizer_path, const char* input_path,
                                         const char* output_path, size_t max_len,
                                         size_t* count_out);

/* ---- metrics ---- */

/* Report JSON {sacrebleu, rouge1, rouge2, rougeL, bp, precisions, hyp_len,
 * ref_len, config}, scores on a 0-100 scale. */
G2ST_API g2st_status g2st_evaluate(const char* const* hypotheses, const char* const* references,
                                   size_t count, char** report_json_out);
G2ST_API g2st_status g2st_evaluate_files(const char* hypotheses_path,
                                         const char* references_path, char** report_json_out);

#ifdef __cplusplus
}
#endif

#endif /* G2ST_G2ST_H_ */
