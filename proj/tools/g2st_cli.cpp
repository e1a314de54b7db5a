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

// Command-line front end. Talks to the toolkit only through the C API.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "g2st/g2st.h"
#include "json.hpp"

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

// Thrown by command bodies; carries the process exit code.
struct CommandError {
  int exit_code;
  std::string message;
};

void Check(g2st_status status) {
  if (status == G2ST_OK) return;
  const int code = status == G2ST_ERR_CONFIG ? kExitUsage : kExitRuntime;
  throw CommandError{code, std::string(g2st_status_name(status)) + ": " + g2st_last_error()};
}

[[noreturn]] void Usage(const std::string& message) { throw CommandError{kExitUsage, message}; }

struct StringDeleter {
  void operator()(char* s) const { g2st_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

std::string Take(char* s) { return std::string(OwnedString(s).get()); }

template <typename T, void (*Free)(T*)>
struct HandleDeleter {
  void operator()(T* p) const { Free(p); }
};
using Corpus = std::unique_ptr<g2st_corpus, HandleDeleter<g2st_corpus, g2st_corpus_free>>;
using Tokenizer =
    std::unique_ptr<g2st_tokenizer, HandleDeleter<g2st_tokenizer, g2st_tokenizer_free>>;
using Model = std::unique_ptr<g2st_model, HandleDeleter<g2st_model, g2st_model_free>>;

// Path of the --config file given to a subcommand, if any.
std::string ConfigPath(CLI::App* cmd) {
  auto* opt = cmd->get_option_no_throw("--config");
  return opt && opt->count() > 0 ? opt->as<std::string>() : std::string();
}

void AddConfig(CLI::App* cmd) {
  cmd->add_option("--config", "JSON object supplying defaults for this command's flags");
}

std::string ConfigScalar(const std::string& key, const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number()) return v.dump();
  Usage("config key `" + key + "` must hold a scalar or an array of scalars");
}

// Fills every flag not given on the command line from the --config JSON
// object. Keys use underscores or dashes ("vocab_size" sets --vocab-size).
void ApplyConfig(CLI::App* cmd) {
  const std::string path = ConfigPath(cmd);
  if (path.empty()) return;
  json doc;
  try {
    std::ifstream in(path, std::ios::binary);
    if (!in) Usage("cannot open config file " + path);
    doc = json::parse(in);
  } catch (const json::exception& e) {
    Usage(path + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object()) Usage(path + ": config must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    std::string name = key;
    for (auto& c : name) {
      if (c == '_') c = '-';
    }
    CLI::Option* opt = cmd->get_option_no_throw("--" + name);
    if (!opt || name == "config") Usage(path + ": unknown key `" + key + "`");
    if (opt->count() > 0) continue;
    if (value.is_array()) {
      for (const auto& v : value) opt->add_result(ConfigScalar(key, v));
    } else {
      opt->add_result(ConfigScalar(key, value));
    }
    try {
      opt->run_callback();
    } catch (const CLI::ParseError& e) {
      Usage(path + ": key `" + key + "`: " + e.what());
    }
  }
}

std::string Fingerprint(const std::string& text) {
  char* out = nullptr;
  Check(g2st_fingerprint(text.c_str(), &out));
  return Take(out);
}

// Metadata stamped into artifacts written by single-step commands: the
// fingerprint of the effective options and the seed.
ordered_json Stamp(const std::string& command, const ordered_json& options, std::uint64_t seed) {
  ordered_json doc{{"command", command}, {"options", options}, {"seed", seed}};
  return ordered_json{{"config_hash", Fingerprint(doc.dump())}, {"seed", seed}};
}

std::string ReadText(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CommandError{kExitRuntime, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteText(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw CommandError{kExitRuntime, "cannot write " + path};
}

void PrintScores(const json& report) {
  std::printf("%-10s %-8s %-8s %-8s\n", "SacreBLEU", "Rouge-1", "Rouge-2", "Rouge-L");
  std::printf("%-10.2f %-8.2f %-8.2f %-8.2f\n", report.at("sacrebleu").get<double>(),
              report.at("rouge1").get<double>(), report.at("rouge2").get<double>(),
              report.at("rougeL").get<double>());
}

// ---- train-tokenizer ----

struct TrainTokenizerArgs {
  std::string corpus;
  std::size_t vocab_size = 1000;
  std::string out;
  std::uint64_t seed = 0;
};

void TrainTokenizer(const TrainTokenizerArgs& a) {
  if (a.corpus.empty() || a.out.empty()) Usage("train-tokenizer needs --corpus and --out");
  g2st_corpus* raw = nullptr;
  Check(g2st_corpus_load(a.corpus.c_str(), &raw));
  Corpus corpus(raw);
  g2st_tokenizer* tok_raw = nullptr;
  Check(g2st_tokenizer_train(corpus.get(), a.vocab_size, &tok_raw));
  Tokenizer tok(tok_raw);
  const auto meta = Stamp("train-tokenizer",
                          {{"corpus", a.corpus}, {"vocab_size", a.vocab_size}}, a.seed);
  Check(g2st_tokenizer_save(tok.get(), a.out.c_str(), meta.dump().c_str()));
  std::printf("tokenizer with %zu tokens written to %s\n", g2st_tokenizer_vocab_size(tok.get()),
              a.out.c_str());
}

// ---- expand-vocab ----

struct ExpandArgs {
  std::string tokenizer;
  std::vector<std::string> corpora;
  std::vector<std::string> term_pairs;
  std::string chars;
  std::string out;
  std::string checkpoint;
  std::string checkpoint_out;
  std::string init = "mean";
  std::uint64_t seed = 0;
};

void ExpandVocab(const ExpandArgs& a) {
  if (a.tokenizer.empty() || a.out.empty()) Usage("expand-vocab needs --tokenizer and --out");
  if (a.corpora.empty() && a.term_pairs.empty() && a.chars.empty()) {
    Usage("expand-vocab needs at least one of --corpus, --term-pairs, --chars");
  }
  if (a.checkpoint.empty() != a.checkpoint_out.empty()) {
    Usage("--checkpoint and --checkpoint-out go together");
  }
  if (a.init != "mean" && a.init != "random") Usage("--init must be mean or random");

  g2st_tokenizer* raw = nullptr;
  Check(g2st_tokenizer_load(a.tokenizer.c_str(), &raw));
  Tokenizer tok(raw);
  const std::size_t before = g2st_tokenizer_vocab_size(tok.get());

  std::vector<Corpus> sources;
  for (const auto& path : a.corpora) {
    g2st_corpus* c = nullptr;
    Check(g2st_corpus_load(path.c_str(), &c));
    sources.emplace_back(c);
  }
  for (const auto& path : a.term_pairs) {
    g2st_corpus* c = nullptr;
    Check(g2st_corpus_load_term_pairs(path.c_str(), &c));
    sources.emplace_back(c);
  }
  for (const auto& c : sources) {
    g2st_tokenizer* next = nullptr;
    Check(g2st_tokenizer_expand_corpus(tok.get(), c.get(), &next));
    tok.reset(next);
  }
  if (!a.chars.empty()) {
    g2st_tokenizer* next = nullptr;
    Check(g2st_tokenizer_expand_file(tok.get(), a.chars.c_str(), &next));
    tok.reset(next);
  }
  const std::size_t after = g2st_tokenizer_vocab_size(tok.get());
  const auto meta = Stamp("expand-vocab",
                          {{"tokenizer", a.tokenizer},
                           {"corpus", a.corpora},
                           {"term_pairs", a.term_pairs},
                           {"chars", a.chars},
                           {"checkpoint", a.checkpoint},
                           {"init", a.init}},
                          a.seed);
  Check(g2st_tokenizer_save(tok.get(), a.out.c_str(), meta.dump().c_str()));
  std::printf("vocabulary %zu -> %zu (+%zu), written to %s\n", before, after, after - before,
              a.out.c_str());
  for (std::size_t i = 0; i < sources.size() && i < a.corpora.size(); ++i) {
    char* report = nullptr;
    Check(g2st_tokenizer_oov(tok.get(), sources[i].get(), &report));
    std::printf("oov on %s: %s\n", a.corpora[i].c_str(), Take(report).c_str());
  }

  if (!a.checkpoint.empty()) {
    g2st_model* m = nullptr;
    Check(g2st_model_load(a.checkpoint.c_str(), &m));
    Model model(m);
    const std::size_t model_vocab = g2st_model_vocab_size(model.get());
    if (model_vocab != before) {
      throw CommandError{kExitRuntime, "vocabulary mismatch: checkpoint has " +
                                           std::to_string(model_vocab) + " entries, tokenizer has " +
                                           std::to_string(before)};
    }
    g2st_model* resized = nullptr;
    Check(g2st_model_resize(model.get(), after,
                            a.init == "mean" ? G2ST_INIT_MEAN : G2ST_INIT_RANDOM, a.seed, &resized));
    Model out(resized);
    Check(g2st_model_save(out.get(), a.checkpoint_out.c_str(), meta.dump().c_str()));
    std::printf("checkpoint resized to %zu rows, written to %s\n", after, a.checkpoint_out.c_str());
  }
}

// ---- generate-corpus ----

struct GenerateArgs {
  std::string spec;
  std::size_t terms = 200;
  std::size_t fillers = 150;
  std::size_t count = 1000;
  std::string out;
  std::string term_pairs_out;
  std::string spec_out;
  std::string general_out;
  std::size_t general_count = 0;
  std::optional<std::uint64_t> seed;
};

void GenerateCorpus(const GenerateArgs& a) {
  if (a.out.empty()) Usage("generate-corpus needs --out");
  std::string spec_text;
  if (!a.spec.empty()) {
    json doc;
    try {
      doc = json::parse(ReadText(a.spec));
    } catch (const json::exception& e) {
      throw CommandError{kExitUsage, a.spec + ": invalid JSON: " + e.what()};
    }
    if (a.seed) doc["seed"] = *a.seed;
    spec_text = doc.dump();
  } else {
    char* out = nullptr;
    Check(g2st_lexicon_synthesize(a.terms, a.fillers, a.seed.value_or(0), &out));
    spec_text = Take(out);
  }
  g2st_corpus* raw = nullptr;
  Check(g2st_corpus_generate(spec_text.c_str(), a.count, &raw));
  Corpus corpus(raw);
  Check(g2st_corpus_save(corpus.get(), a.out.c_str()));
  std::printf("%zu titles written to %s\n", g2st_corpus_size(corpus.get()), a.out.c_str());
  if (!a.spec_out.empty()) {
    WriteText(a.spec_out, json::parse(spec_text).dump(1) + "\n");
  }
  if (!a.term_pairs_out.empty()) {
    Check(g2st_spec_save_term_pairs(spec_text.c_str(), a.term_pairs_out.c_str()));
    std::printf("term pairs written to %s\n", a.term_pairs_out.c_str());
  }
  if (!a.general_out.empty()) {
    char* general = nullptr;
    Check(g2st_spec_general(spec_text.c_str(), &general));
    const std::string general_spec = Take(general);
    g2st_corpus* g = nullptr;
    Check(g2st_corpus_generate(general_spec.c_str(), a.general_count ? a.general_count : a.count, &g));
    Corpus general_corpus(g);
    Check(g2st_corpus_save(general_corpus.get(), a.general_out.c_str()));
    std::printf("%zu general titles written to %s\n", g2st_corpus_size(general_corpus.get()),
                a.general_out.c_str());
  }
}

// ---- pipeline ----

struct PipelineArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string output_dir;
  bool no_ev = false;
  bool no_tp = false;
  bool no_pc = false;
  bool no_sse = false;
  bool ablate = false;
  bool quiet = false;
};

void PrintProgress(const char* message, void*) { std::fprintf(stderr, "%s\n", message); }

void Pipeline(const PipelineArgs& a) {
  json doc = json::object();
  if (!a.config.empty()) {
    try {
      doc = json::parse(ReadText(a.config));
    } catch (const json::exception& e) {
      throw CommandError{kExitUsage, a.config + ": invalid JSON: " + e.what()};
    }
    if (!doc.is_object()) Usage(a.config + ": run config must be a JSON object");
  }
  if (a.seed) doc["seed"] = *a.seed;
  if (!a.output_dir.empty()) doc["paths"]["output_dir"] = a.output_dir;
  const bool plan_flags = a.no_ev || a.no_tp || a.no_pc || a.no_sse;
  if (a.ablate && plan_flags) Usage("--ablate runs fixed plans; drop the --no-* switches");
  if (plan_flags) {
    auto& plan = doc["plan"];
    if (!plan.is_object()) plan = json::object();
    if (a.no_ev) plan["expand_vocab"] = false;
    if (a.no_tp) plan["stage1_term_pairs"] = false;
    if (a.no_pc) plan["stage2_parallel"] = false;
    if (a.no_sse || a.no_tp) plan["sse_stage1"] = false;
    if (a.no_sse || a.no_pc) plan["sse_stage2"] = false;
  }
  const std::string text = doc.dump();
  g2st_progress_fn progress = a.quiet ? nullptr : PrintProgress;
  char* out = nullptr;
  if (a.ablate) {
    Check(g2st_pipeline_ablate(text.c_str(), progress, nullptr, &out));
    const json summary = json::parse(Take(out));
    std::printf("%-4s %-10s %-8s %-8s %-8s\n", "Row", "SacreBLEU", "Rouge-1", "Rouge-2", "Rouge-L");
    for (const auto& row : summary.at("rows")) {
      std::printf("%-4s %-10.2f %-8.2f %-8.2f %-8.2f\n", row.at("row").get<std::string>().c_str(),
                  row.at("sacrebleu").get<double>(), row.at("rouge1").get<double>(),
                  row.at("rouge2").get<double>(), row.at("rougeL").get<double>());
    }
  } else {
    Check(g2st_pipeline_run(text.c_str(), progress, nullptr, &out));
    const json report = json::parse(Take(out));
    PrintScores(report.at("evaluation"));
  }
}

// ---- translate ----

struct TranslateArgs {
  std::string checkpoint;
  std::string tokenizer;
  std::string input;
  std::string out;
  std::size_t max_len = 64;
  std::uint64_t seed = 0;
};

void Translate(const TranslateArgs& a) {
  if (a.checkpoint.empty() || a.tokenizer.empty() || a.input.empty() || a.out.empty()) {
    Usage("translate needs --checkpoint, --tokenizer, --input and --out");
  }
  std::size_t n = 0;
  Check(g2st_translate_file(a.checkpoint.c_str(), a.tokenizer.c_str(), a.input.c_str(),
                            a.out.c_str(), a.max_len, &n));
  std::printf("%zu translations written to %s\n", n, a.out.c_str());
}

// ---- evaluate ----

struct EvaluateArgs {
  std::string hyp;
  std::string ref;
  std::string out;
  std::uint64_t seed = 0;
};

void Evaluate(const EvaluateArgs& a) {
  if (a.hyp.empty() || a.ref.empty()) Usage("evaluate needs --hyp and --ref");
  char* out = nullptr;
  Check(g2st_evaluate_files(a.hyp.c_str(), a.ref.c_str(), &out));
  ordered_json report = ordered_json::parse(Take(out));
  if (!a.out.empty()) {
    const auto meta = Stamp("evaluate", {{"hyp", a.hyp}, {"ref", a.ref}}, a.seed);
    report["config_hash"] = meta["config_hash"];
    report["seed"] = a.seed;
    WriteText(a.out, report.dump(2) + "\n");
  }
  PrintScores(report);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"g2st: general-to-specialized translation toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(g2st_version()));

  TrainTokenizerArgs tt;
  auto* cmd_tt = app.add_subcommand("train-tokenizer", "Train a BPE tokenizer on a parallel corpus");
  AddConfig(cmd_tt);
  cmd_tt->add_option("--corpus", tt.corpus, "Parallel corpus (JSON Lines)");
  cmd_tt->add_option("--vocab-size", tt.vocab_size, "Target vocabulary size")->capture_default_str();
  cmd_tt->add_option("--out", tt.out, "Output tokenizer file");
  cmd_tt->add_option("--seed", tt.seed, "Seed recorded in the output")->capture_default_str();

  ExpandArgs ev;
  auto* cmd_ev = app.add_subcommand("expand-vocab", "Append unseen characters to a tokenizer");
  AddConfig(cmd_ev);
  cmd_ev->add_option("--tokenizer", ev.tokenizer, "Tokenizer to expand");
  cmd_ev->add_option("--corpus", ev.corpora, "Parallel corpus whose characters are added");
  cmd_ev->add_option("--term-pairs", ev.term_pairs, "Term pairs whose characters are added");
  cmd_ev->add_option("--chars", ev.chars, "Text file with one character per line");
  cmd_ev->add_option("--out", ev.out, "Output tokenizer file");
  cmd_ev->add_option("--checkpoint", ev.checkpoint, "Checkpoint to resize alongside");
  cmd_ev->add_option("--checkpoint-out", ev.checkpoint_out, "Resized checkpoint path");
  cmd_ev->add_option("--init", ev.init, "New embedding rows: mean or random")->capture_default_str();
  cmd_ev->add_option("--seed", ev.seed, "Seed for new embedding rows")->capture_default_str();

  GenerateArgs gc;
  auto* cmd_gc = app.add_subcommand("generate-corpus", "Generate synthetic keyword-stacked titles");
  AddConfig(cmd_gc);
  cmd_gc->add_option("--spec", gc.spec, "Generator spec (JSON); default synthesizes a lexicon");
  cmd_gc->add_option("--terms", gc.terms, "Domain terms in a synthesized lexicon")->capture_default_str();
  cmd_gc->add_option("--fillers", gc.fillers, "General keywords in a synthesized lexicon")
      ->capture_default_str();
  cmd_gc->add_option("--count", gc.count, "Number of titles")->capture_default_str();
  cmd_gc->add_option("--out", gc.out, "Output corpus (JSON Lines)");
  cmd_gc->add_option("--term-pairs-out", gc.term_pairs_out, "Write the term lexicon here");
  cmd_gc->add_option("--spec-out", gc.spec_out, "Write the generator spec here");
  cmd_gc->add_option("--general-out", gc.general_out, "Write a term-free general corpus here");
  cmd_gc->add_option("--general-count", gc.general_count, "Titles in the general corpus");
  cmd_gc->add_option("--seed", gc.seed, "Generator seed");

  PipelineArgs pl;
  auto* cmd_pl = app.add_subcommand("pipeline", "Run vocabulary expansion and two-stage fine-tuning");
  cmd_pl->add_option("--config", pl.config, "Run config (JSON)");
  cmd_pl->add_option("--seed", pl.seed, "Override the run seed");
  cmd_pl->add_option("--output-dir", pl.output_dir, "Override paths.output_dir");
  cmd_pl->add_flag("--no-ev", pl.no_ev, "Skip vocabulary expansion");
  cmd_pl->add_flag("--no-tp", pl.no_tp, "Skip the term-pair stage");
  cmd_pl->add_flag("--no-pc", pl.no_pc, "Skip the parallel-corpus stage");
  cmd_pl->add_flag("--no-sse", pl.no_sse, "Disable the dual-pass KL term");
  cmd_pl->add_flag("--ablate", pl.ablate, "Run ablation rows A-D");
  cmd_pl->add_flag("--quiet", pl.quiet, "No progress on standard error");

  TranslateArgs tr;
  auto* cmd_tr = app.add_subcommand("translate", "Greedy-decode every source line of a file");
  AddConfig(cmd_tr);
  cmd_tr->add_option("--checkpoint", tr.checkpoint, "Model checkpoint");
  cmd_tr->add_option("--tokenizer", tr.tokenizer, "Tokenizer matching the checkpoint");
  cmd_tr->add_option("--input", tr.input, "JSON Lines with `source` or `text` and optional `id`");
  cmd_tr->add_option("--out", tr.out, "Output JSON Lines {id, text}");
  cmd_tr->add_option("--max-len", tr.max_len, "Maximum generated tokens")->capture_default_str();
  cmd_tr->add_option("--seed", tr.seed, "Unused by greedy decoding; accepted for uniformity")
      ->capture_default_str();

  EvaluateArgs ea;
  auto* cmd_ea = app.add_subcommand("evaluate", "Score hypotheses against references");
  AddConfig(cmd_ea);
  cmd_ea->add_option("--hyp", ea.hyp, "Hypotheses (JSON Lines {id, text})");
  cmd_ea->add_option("--ref", ea.ref, "References ({id, text} or {id, target})");
  cmd_ea->add_option("--out", ea.out, "Write the JSON report here");
  cmd_ea->add_option("--seed", ea.seed, "Seed recorded in the report")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    for (auto* cmd : {cmd_tt, cmd_ev, cmd_gc, cmd_tr, cmd_ea}) {
      if (cmd->parsed()) ApplyConfig(cmd);
    }
    if (cmd_tt->parsed()) TrainTokenizer(tt);
    if (cmd_ev->parsed()) ExpandVocab(ev);
    if (cmd_gc->parsed()) GenerateCorpus(gc);
    if (cmd_pl->parsed()) Pipeline(pl);
    if (cmd_tr->parsed()) Translate(tr);
    if (cmd_ea->parsed()) Evaluate(ea);
  } catch (const CommandError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.exit_code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
