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

#include "g2st/runner.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string_view>
#include <utility>

#include "g2st/common.hpp"

namespace g2st {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;
namespace fs = std::filesystem;

template <typename T>
T ReadOr(const json& doc, const char* key, T fallback) {
  auto it = doc.find(key);
  if (it == doc.end() || it->is_null()) return fallback;
  return it->get<T>();
}

std::string JoinProblems(const std::vector<std::string>& problems) {
  std::string out;
  for (const auto& p : problems) out += "\n  - " + p;
  return out;
}

void Report(const ProgressFn& progress, const std::string& message) {
  if (progress) progress(message);
}

ordered_json RunStamp(const RunConfig& config) {
  return ordered_json{{"config_hash", config.Hash()}, {"seed", config.seed}};
}

void WriteJson(const fs::path& path, const ordered_json& doc) { WriteFile(path, doc.dump(2) + "\n"); }

std::string Scores(const EvaluationReport& r) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), "sacrebleu %.2f rouge1 %.2f rouge2 %.2f rougeL %.2f",
                r.bleu.score, r.rouge1, r.rouge2, r.rougeL);
  return buf;
}

}  // namespace

ordered_json BaseModelOptions::ToJson() const {
  return ordered_json{{"vocab_size", vocab_size},
                      {"epochs", epochs},
                      {"learning_rate", learning_rate},
                      {"batch_size", batch_size},
                      {"dropout_rate", dropout_rate}};
}

BaseModelOptions BaseModelOptions::FromJson(const json& doc) {
  BaseModelOptions o;
  try {
    o.vocab_size = ReadOr(doc, "vocab_size", o.vocab_size);
    o.epochs = ReadOr(doc, "epochs", o.epochs);
    o.learning_rate = ReadOr(doc, "learning_rate", o.learning_rate);
    o.batch_size = ReadOr(doc, "batch_size", o.batch_size);
    o.dropout_rate = ReadOr(doc, "dropout_rate", o.dropout_rate);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid base options: ") + e.what());
  }
  return o;
}

std::vector<std::string> RunConfig::Problems() const {
  std::vector<std::string> out;
  auto check_file = [&](const fs::path& p, const char* field) {
    std::error_code ec;
    if (!fs::is_regular_file(p, ec)) {
      out.push_back(std::string("paths.") + field + ": file not found: " + p.string());
    }
  };
  auto capture = [&](auto&& fn) {
    try {
      fn();
    } catch (const Error& e) {
      out.push_back(e.what());
    }
  };

  if (paths.output_dir.empty()) out.push_back("paths.output_dir is required");
  if (paths.parallel_corpus.empty()) {
    out.push_back("paths.parallel_corpus is required");
  } else {
    check_file(paths.parallel_corpus, "parallel_corpus");
  }
  if (!paths.parallel_test.empty()) {
    check_file(paths.parallel_test, "parallel_test");
  } else if (train_count == 0) {
    out.push_back("train_count must be positive when paths.parallel_test is not set");
  }
  if (!paths.term_pairs.empty()) {
    check_file(paths.term_pairs, "term_pairs");
  } else if (plan.stage1_term_pairs) {
    out.push_back("paths.term_pairs is required when stage 1 is enabled");
  }

  const bool have_tok = !paths.base_tokenizer.empty();
  const bool have_ckpt = !paths.base_checkpoint.empty();
  if (have_tok != have_ckpt) {
    out.push_back("paths.base_tokenizer and paths.base_checkpoint must be given together");
  }
  if (have_tok) check_file(paths.base_tokenizer, "base_tokenizer");
  if (have_ckpt) check_file(paths.base_checkpoint, "base_checkpoint");
  if (!have_tok && !have_ckpt) {
    if (paths.general_corpus.empty()) {
      out.push_back("paths.general_corpus is required when no base checkpoint is given");
    } else {
      check_file(paths.general_corpus, "general_corpus");
    }
    ModelConfig probe = model;
    probe.vocab_size = static_cast<int>(std::max<std::size_t>(base.vocab_size, 5));
    capture([&] { probe.Validate(); });
    if (base.vocab_size <= Tokenizer::kNumSpecials) out.push_back("base.vocab_size is too small");
    if (base.epochs < 1) out.push_back("base.epochs must be >= 1");
    if (!(base.learning_rate > 0.0)) out.push_back("base.learning_rate must be positive");
    if (base.batch_size < 1) out.push_back("base.batch_size must be >= 1");
    if (!(base.dropout_rate >= 0.0 && base.dropout_rate < 1.0)) {
      out.push_back("base.dropout_rate must lie in [0, 1)");
    }
  }
  capture([&] { train.Validate(); });
  capture([&] { plan.Validate(); });
  if (decode_max_len < 1) out.push_back("decode_max_len must be >= 1");
  return out;
}

void RunConfig::Validate() const {
  const auto problems = Problems();
  if (!problems.empty()) {
    throw Error(ErrorCode::kConfig, "invalid run config:" + JoinProblems(problems));
  }
}

ordered_json RunConfig::ToJson() const {
  ordered_json p{{"term_pairs", paths.term_pairs.generic_string()},
                 {"parallel_corpus", paths.parallel_corpus.generic_string()},
                 {"parallel_test", paths.parallel_test.generic_string()},
                 {"general_corpus", paths.general_corpus.generic_string()},
                 {"base_tokenizer", paths.base_tokenizer.generic_string()},
                 {"base_checkpoint", paths.base_checkpoint.generic_string()},
                 {"output_dir", paths.output_dir.generic_string()}};
  return ordered_json{{"seed", seed},
                      {"paths", std::move(p)},
                      {"train", train.ToJson()},
                      {"plan", plan.ToJson()},
                      {"model", model.ToJson()},
                      {"base", base.ToJson()},
                      {"train_count", train_count},
                      {"decode_max_len", decode_max_len}};
}

RunConfig RunConfig::FromJson(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::kConfig, "run config must be a JSON object");
  static const std::set<std::string> kKeys = {"seed", "paths", "train", "plan", "model",
                                              "base", "train_count", "decode_max_len"};
  for (const auto& [key, value] : doc.items()) {
    if (!kKeys.count(key)) throw Error(ErrorCode::kConfig, "unknown run config key: " + key);
  }
  RunConfig c;
  const json empty = json::object();
  try {
    const json& p = doc.contains("paths") ? doc.at("paths") : empty;
    c.paths.term_pairs = ReadOr<std::string>(p, "term_pairs", "");
    c.paths.parallel_corpus = ReadOr<std::string>(p, "parallel_corpus", "");
    c.paths.parallel_test = ReadOr<std::string>(p, "parallel_test", "");
    c.paths.general_corpus = ReadOr<std::string>(p, "general_corpus", "");
    c.paths.base_tokenizer = ReadOr<std::string>(p, "base_tokenizer", "");
    c.paths.base_checkpoint = ReadOr<std::string>(p, "base_checkpoint", "");
    c.paths.output_dir = ReadOr<std::string>(p, "output_dir", "");
    c.train_count = ReadOr(doc, "train_count", c.train_count);
    c.decode_max_len = ReadOr(doc, "decode_max_len", c.decode_max_len);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid run config: ") + e.what());
  }
  c.train = TrainConfig::FromJson(doc.contains("train") ? doc.at("train") : empty);
  c.plan = StagePlan::FromJson(doc.contains("plan") ? doc.at("plan") : empty);
  c.model = ModelConfig::FromJson(doc.contains("model") ? doc.at("model") : empty);
  c.base = BaseModelOptions::FromJson(doc.contains("base") ? doc.at("base") : empty);
  try {
    c.seed = ReadOr(doc, "seed", c.train.seed);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("invalid seed: ") + e.what());
  }
  c.train.seed = c.seed;
  return c;
}

RunConfig RunConfig::Load(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(ReadFile(path));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": invalid JSON: " + e.what());
  }
  return FromJson(doc);
}

std::string RunConfig::Hash() const { return Hex64(Fnv1a64(ToJson().dump())); }

BaseModel PretrainBaseModel(const Corpus& general, const ModelConfig& model_config,
                            const BaseModelOptions& options, std::uint64_t seed,
                            const ProgressFn& progress) {
  std::vector<std::string> texts = general.sources();
  for (auto& t : general.targets()) texts.push_back(std::move(t));
  Tokenizer tok = Tokenizer::Train(texts, options.vocab_size);
  ModelConfig mc = model_config;
  mc.vocab_size = static_cast<int>(tok.vocab_size());
  mc.Validate();
  ModelParameters model = InitModel(mc, MixSeed(seed, 0xBA5E));

  TrainConfig tc;
  tc.batch_size = options.batch_size;
  tc.learning_rate = options.learning_rate;
  tc.dropout_rate = options.dropout_rate;
  tc.seed = MixSeed(seed, 0xBA5F);
  const auto report = RunStage(model, tok, general, tc, {"pretrain", options.epochs, false, 0});
  Report(progress, "pretrain: " + std::to_string(report.steps) + " steps, final ce " +
                       std::to_string(report.last.ce));
  return {std::move(model), std::move(tok)};
}

void CheckVocabMatch(const ModelParameters& model, const Tokenizer& tokenizer) {
  const auto model_vocab = static_cast<std::size_t>(model.config().vocab_size);
  if (model_vocab != tokenizer.vocab_size()) {
    throw Error(ErrorCode::kInvalidArgument,
                "vocabulary mismatch: checkpoint has " + std::to_string(model_vocab) +
                    " entries, tokenizer has " + std::to_string(tokenizer.vocab_size()));
  }
}

std::vector<std::string> TranslateAll(const ModelParameters& model, const Tokenizer& tokenizer,
                                      const std::vector<std::string>& sources,
                                      std::size_t max_len) {
  std::vector<std::string> out;
  out.reserve(sources.size());
  for (const auto& s : sources) {
    const auto src = EncodeSource(tokenizer, s, model.config().max_seq_len);
    out.push_back(tokenizer.Decode(GreedyDecode(model, src, max_len)));
  }
  return out;
}

ordered_json RunPipeline(const RunConfig& config, const ProgressFn& progress) {
  config.Validate();
  const fs::path& out_dir = config.paths.output_dir;
  const ordered_json prov = RunStamp(config);
  TrainConfig train = config.train;
  train.seed = config.seed;

  std::vector<TermPair> term_pairs;
  if (!config.paths.term_pairs.empty()) term_pairs = LoadTermPairs(config.paths.term_pairs);
  const Corpus parallel = LoadParallelCorpus(config.paths.parallel_corpus);
  Corpus train_set = parallel;
  Corpus test_set = parallel;
  if (config.paths.parallel_test.empty()) {
    std::tie(train_set, test_set) = SplitCorpus(parallel, config.train_count, config.seed);
  } else {
    test_set = LoadParallelCorpus(config.paths.parallel_test);
  }

  ordered_json report;
  report["config_hash"] = config.Hash();
  report["seed"] = config.seed;
  report["config"] = config.ToJson();
  report["train_examples"] = train_set.size();
  report["test_examples"] = test_set.size();

  std::optional<BaseModel> base;
  ordered_json artifacts;
  if (!config.paths.base_checkpoint.empty()) {
    base.emplace(BaseModel{LoadCheckpoint(config.paths.base_checkpoint),
                           Tokenizer::Load(config.paths.base_tokenizer)});
    CheckVocabMatch(base->model, base->tokenizer);
  } else {
    base.emplace(PretrainBaseModel(LoadParallelCorpus(config.paths.general_corpus), config.model,
                                   config.base, config.seed, progress));
    const fs::path tok_path = out_dir / "base" / "tokenizer.json";
    const fs::path ckpt_path = out_dir / "base" / "model.ckpt";
    ordered_json meta = prov;
    meta["stage"] = "pretrain";
    base->tokenizer.Save(tok_path, meta);
    SaveCheckpoint(base->model, ckpt_path, meta);
    artifacts["base_tokenizer"] = tok_path.generic_string();
    artifacts["base_checkpoint"] = ckpt_path.generic_string();
  }

  auto on_stage_end = [&](const StageReport& stage, const ModelParameters& model,
                          const Tokenizer&) {
    ordered_json meta = prov;
    meta["stage"] = stage.name;
    meta["plan"] = config.plan.ToJson();
    const fs::path path = out_dir / (stage.name + ".ckpt");
    SaveCheckpoint(model, path, meta);
    artifacts[stage.name + "_checkpoint"] = path.generic_string();
    Report(progress, stage.name + ": " + std::to_string(stage.steps) + " steps, final ce " +
                         std::to_string(stage.last.ce) + " kl " + std::to_string(stage.last.kl));
  };
  PipelineOutcome outcome = RunG2stPipeline(base->model, base->tokenizer, term_pairs, train_set,
                                            config.plan, train, on_stage_end);

  std::string log;
  for (const auto& stage : outcome.stages) {
    for (const auto& step : stage.log) {
      ordered_json line = step.ToJson();
      line["config_hash"] = prov["config_hash"];
      line["seed"] = config.seed;
      log += line.dump() + "\n";
    }
  }
  WriteFile(out_dir / "train_log.jsonl", log);

  ordered_json meta = prov;
  meta["stage"] = "final";
  meta["plan"] = config.plan.ToJson();
  SaveCheckpoint(outcome.model, out_dir / "model.ckpt", meta);
  outcome.tokenizer.Save(out_dir / "tokenizer.json", meta);
  artifacts["checkpoint"] = (out_dir / "model.ckpt").generic_string();
  artifacts["tokenizer"] = (out_dir / "tokenizer.json").generic_string();

  const auto hyps = TranslateAll(outcome.model, outcome.tokenizer, test_set.sources(),
                                 config.decode_max_len);
  std::string lines;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    ordered_json line{{"id", test_set[i].id}, {"text", hyps[i]}};
    line["config_hash"] = prov["config_hash"];
    line["seed"] = config.seed;
    lines += line.dump() + "\n";
  }
  WriteFile(out_dir / "translations.jsonl", lines);
  const auto refs = test_set.targets();
  const EvaluationReport eval = EvaluateCorpus(hyps, refs);
  ordered_json eval_json = eval.ToJson();
  eval_json["config_hash"] = prov["config_hash"];
  eval_json["seed"] = config.seed;
  WriteJson(out_dir / "eval.json", eval_json);
  artifacts["train_log"] = (out_dir / "train_log.jsonl").generic_string();
  artifacts["translations"] = (out_dir / "translations.jsonl").generic_string();
  artifacts["evaluation"] = (out_dir / "eval.json").generic_string();
  Report(progress, "test set: " + Scores(eval));

  for (auto& [key, value] : outcome.report.items()) report[key] = value;
  report["oov_test_before"] = base->tokenizer.Oov(test_set.sources()).rate;
  report["oov_test_after"] = outcome.tokenizer.Oov(test_set.sources()).rate;
  report["evaluation"] = eval.ToJson();
  report["artifacts"] = artifacts;
  WriteJson(out_dir / "report.json", report);
  return report;
}

ordered_json RunAblation(const RunConfig& config, const ProgressFn& progress) {
  config.Validate();
  RunConfig shared = config;
  if (shared.paths.base_checkpoint.empty()) {
    const BaseModel base = PretrainBaseModel(LoadParallelCorpus(config.paths.general_corpus),
                                             config.model, config.base, config.seed, progress);
    ordered_json meta = RunStamp(config);
    meta["stage"] = "pretrain";
    shared.paths.base_tokenizer = config.paths.output_dir / "base" / "tokenizer.json";
    shared.paths.base_checkpoint = config.paths.output_dir / "base" / "model.ckpt";
    base.tokenizer.Save(shared.paths.base_tokenizer, meta);
    SaveCheckpoint(base.model, shared.paths.base_checkpoint, meta);
  }

  const std::pair<const char*, StagePlan> rows[] = {{"A", StagePlan::RowA()},
                                                   {"B", StagePlan::RowB()},
                                                   {"C", StagePlan::RowC()},
                                                   {"D", StagePlan::RowD()}};
  ordered_json summary;
  summary["config_hash"] = config.Hash();
  summary["seed"] = config.seed;
  ordered_json table = ordered_json::array();
  for (const auto& [name, plan] : rows) {
    RunConfig row = shared;
    row.plan = plan;
    row.paths.output_dir = config.paths.output_dir / (std::string("row_") + name);
    Report(progress, std::string("row ") + name);
    const ordered_json report = RunPipeline(row, progress);
    const auto& eval = report.at("evaluation");
    table.push_back(ordered_json{{"row", name},
                                 {"plan", plan.ToJson()},
                                 {"sacrebleu", eval.at("sacrebleu")},
                                 {"rouge1", eval.at("rouge1")},
                                 {"rouge2", eval.at("rouge2")},
                                 {"rougeL", eval.at("rougeL")},
                                 {"report", (row.paths.output_dir / "report.json").generic_string()}});
  }
  summary["rows"] = std::move(table);
  WriteJson(config.paths.output_dir / "ablation.json", summary);
  return summary;
}

std::vector<SourceRecord> LoadSourceRecords(const fs::path& path) {
  std::vector<SourceRecord> out;
  ForEachJsonLine(path, [&](std::size_t line_no, const json& obj) {
    const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
    SourceRecord r;
    if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
      if (it->is_string()) {
        r.id = it->get<std::string>();
      } else if (it->is_number_integer()) {
        r.id = std::to_string(it->get<long long>());
      } else {
        throw Error(ErrorCode::kParse, where + "field `id` must be a string or integer");
      }
    } else {
      r.id = std::to_string(line_no);
    }
    const char* key = obj.contains("source") ? "source" : "text";
    auto it = obj.find(key);
    if (it == obj.end() || !it->is_string()) {
      throw Error(ErrorCode::kParse, where + "missing string field `source` or `text`");
    }
    r.text = it->get<std::string>();
    out.push_back(std::move(r));
  });
  return out;
}

std::size_t TranslateFile(const fs::path& checkpoint, const fs::path& tokenizer,
                          const fs::path& input, const fs::path& output, std::size_t max_len) {
  json meta;
  const ModelParameters model = LoadCheckpoint(checkpoint, &meta);
  const Tokenizer tok = Tokenizer::Load(tokenizer);
  CheckVocabMatch(model, tok);
  const auto records = LoadSourceRecords(input);
  std::vector<std::string> sources;
  for (const auto& r : records) sources.push_back(r.text);
  const auto hyps = TranslateAll(model, tok, sources, max_len);
  std::string lines;
  for (std::size_t i = 0; i < hyps.size(); ++i) {
    ordered_json line{{"id", records[i].id}, {"text", hyps[i]}};
    if (meta.contains("config_hash")) line["config_hash"] = meta["config_hash"];
    if (meta.contains("seed")) line["seed"] = meta["seed"];
    lines += line.dump() + "\n";
  }
  WriteFile(output, lines);
  return hyps.size();
}

EvaluationReport EvaluateFiles(const fs::path& hypotheses, const fs::path& references) {
  auto load = [](const fs::path& path) {
    std::vector<std::pair<std::string, std::string>> rows;
    std::map<std::string, std::size_t> seen;
    ForEachJsonLine(path, [&](std::size_t line_no, const json& obj) {
      const auto where = path.string() + ":" + std::to_string(line_no) + ": ";
      std::string id;
      if (auto it = obj.find("id"); it != obj.end() && !it->is_null()) {
        id = it->is_string() ? it->get<std::string>() : it->dump();
      } else {
        id = std::to_string(line_no);
      }
      const char* key = obj.contains("text") ? "text" : "target";
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_string()) {
        throw Error(ErrorCode::kParse, where + "missing string field `" + key + "`");
      }
      if (!seen.emplace(id, line_no).second) {
        throw Error(ErrorCode::kParse, where + "duplicate id \"" + id + "\"");
      }
      rows.emplace_back(id, it->get<std::string>());
    });
    return rows;
  };
  const auto hyp_rows = load(hypotheses);
  const auto ref_rows = load(references);
  std::map<std::string, std::string> hyp_by_id(hyp_rows.begin(), hyp_rows.end());
  std::set<std::string> ref_ids;
  std::vector<std::string> missing;
  std::vector<std::string> hyps;
  std::vector<std::string> refs;
  for (const auto& [id, text] : ref_rows) {
    ref_ids.insert(id);
    auto it = hyp_by_id.find(id);
    if (it == hyp_by_id.end()) {
      missing.push_back(id);
      continue;
    }
    hyps.push_back(it->second);
    refs.push_back(text);
  }
  std::vector<std::string> extra;
  for (const auto& [id, text] : hyp_rows) {
    if (!ref_ids.count(id)) extra.push_back(id);
  }
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "hypothesis and reference ids differ";
    auto list = [&](const char* label, const std::vector<std::string>& ids) {
      if (ids.empty()) return;
      msg += std::string("; ") + label + ":";
      for (const auto& id : ids) msg += " \"" + id + "\"";
    };
    list("missing from hypotheses", missing);
    list("missing from references", extra);
    throw Error(ErrorCode::kInvalidArgument, msg);
  }
  if (refs.empty()) throw Error(ErrorCode::kInvalidArgument, "no records to evaluate");
  return EvaluateCorpus(hyps, refs);
}

}  // namespace g2st
