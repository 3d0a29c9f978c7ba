// Copyright 2026 The MNELM Authors.
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

#include "mnelm/pipeline.h"

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "json_fields.h"
#include "mnelm/corpus.h"
#include "mnelm/errors.h"
#include "mnelm/rng.h"

namespace mnelm {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path resolve(const fs::path& base, const fs::path& p) {
  if (p.empty()) return p;
  return (p.is_absolute() ? p : base / p).lexically_normal();
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Error::Category::kOther, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(Error::Category::kOther, "write failed: " + path.string());
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw MissingArtifact(path.string());
  std::ifstream in(path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(0, path.string() + ": " + e.what());
  }
}

double mask_probability(const PipelineConfig& config, CorruptionMode mode) {
  return mode == CorruptionMode::kMnelm ? config.corruption.mask_probability
                                        : config.corruption.mlm_mask_probability;
}

void require_input(const fs::path& p, const char* name, bool optional = false) {
  if (p.empty()) {
    if (optional) return;
    throw ConfigError(std::string("paths.") + name + " is not set");
  }
  if (!fs::is_regular_file(p)) {
    throw ConfigError(std::string("paths.") + name + " does not exist: " + p.string());
  }
}

void write_snapshot(const PipelineConfig& config) {
  write_json(OutputLayout{config.paths.output_dir}.config_snapshot(), config.to_json());
}

// Builds the shared encoder-decoder vocabulary from the pretraining and
// summarization training text.
Vocabulary build_seq2seq_vocabulary(const PipelineConfig& config) {
  std::vector<Document> docs = load_documents(config.paths.pretrain_corpus, false);
  std::vector<Document> train = load_documents(config.paths.summarization_train, true);
  docs.insert(docs.end(), std::make_move_iterator(train.begin()),
              std::make_move_iterator(train.end()));
  Vocabulary vocab = build_vocab(docs, static_cast<std::size_t>(config.seq2seq.vocab_size));
  vocab.save(OutputLayout{config.paths.output_dir}.vocabulary());
  return vocab;
}

}  // namespace

void PipelineConfig::validate() const {
  require_input(paths.annotations_train, "annotations_train");
  require_input(paths.annotations_dev, "annotations_dev", true);
  require_input(paths.pretrain_corpus, "pretrain_corpus");
  require_input(paths.summarization_train, "summarization_train");
  require_input(paths.summarization_test, "summarization_test");
  if (paths.output_dir.empty()) throw ConfigError("paths.output_dir is not set");
  ner.validate();
  seq2seq.validate();
  pretrain.validate();
  finetune.validate();
  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    CorruptionConfig c;
    c.mode = mode;
    c.mask_probability = mask_probability(*this, mode);
    c.collapse_spans = corruption.collapse_spans;
    c.validate();
  }
  if (max_summary_len < 1) throw ConfigError("evaluation.max_summary_len must be positive");
}

json PipelineConfig::to_json() const {
  return {{"config_version", kConfigVersion},
          {"seed", seed},
          {"paths",
           {{"annotations_train", paths.annotations_train.string()},
            {"annotations_dev", paths.annotations_dev.string()},
            {"pretrain_corpus", paths.pretrain_corpus.string()},
            {"summarization_train", paths.summarization_train.string()},
            {"summarization_test", paths.summarization_test.string()},
            {"output_dir", paths.output_dir.string()}}},
          {"ner", ner.to_json()},
          {"corruption",
           {{"mask_probability", corruption.mask_probability},
            {"mlm_mask_probability", corruption.mlm_mask_probability},
            {"collapse_spans", corruption.collapse_spans}}},
          {"seq2seq", seq2seq.to_json()},
          {"pretrain", mnelm::to_json(pretrain)},
          {"finetune", mnelm::to_json(finetune)},
          {"evaluation", {{"max_summary_len", max_summary_len}}}};
}

PipelineConfig PipelineConfig::from_json(const json& j, const fs::path& base_dir) {
  PipelineConfig c;
  int version = kConfigVersion;
  json paths = json::object(), ner = json::object(), corruption = json::object(),
       seq2seq = json::object(), pretrain = json::object(), finetune = json::object(),
       evaluation = json::object();
  internal::FieldReader(j, "config")
      .read("config_version", version)
      .read("seed", c.seed)
      .read("paths", paths)
      .read("ner", ner)
      .read("corruption", corruption)
      .read("seq2seq", seq2seq)
      .read("pretrain", pretrain)
      .read("finetune", finetune)
      .read("evaluation", evaluation)
      .finish();
  if (version != kConfigVersion) {
    throw ConfigError("unsupported config_version " + std::to_string(version));
  }
  std::string annotations_train, annotations_dev, pretrain_corpus, summarization_train,
      summarization_test, output_dir;
  internal::FieldReader(paths, "paths")
      .read("annotations_train", annotations_train)
      .read("annotations_dev", annotations_dev)
      .read("pretrain_corpus", pretrain_corpus)
      .read("summarization_train", summarization_train)
      .read("summarization_test", summarization_test)
      .read("output_dir", output_dir)
      .finish();
  c.paths = {resolve(base_dir, annotations_train), resolve(base_dir, annotations_dev),
             resolve(base_dir, pretrain_corpus),   resolve(base_dir, summarization_train),
             resolve(base_dir, summarization_test), resolve(base_dir, output_dir)};
  c.ner = NerConfig::from_json(ner, c.ner);
  internal::FieldReader(corruption, "corruption")
      .read("mask_probability", c.corruption.mask_probability)
      .read("mlm_mask_probability", c.corruption.mlm_mask_probability)
      .read("collapse_spans", c.corruption.collapse_spans)
      .finish();
  c.seq2seq = Seq2SeqConfig::from_json(seq2seq, c.seq2seq);
  c.pretrain = schedule_from_json(pretrain, c.pretrain);
  c.finetune = schedule_from_json(finetune, c.finetune);
  internal::FieldReader(evaluation, "evaluation")
      .read("max_summary_len", c.max_summary_len)
      .finish();
  return c;
}

void apply_override(json& config, std::string_view assignment) {
  const std::size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override must look like key=value: " + std::string(assignment));
  }
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  json value;
  try {
    value = json::parse(text);
  } catch (const json::exception&) {
    value = text;
  }
  if (key.rfind("paths.", 0) == 0 && value.is_string()) {
    value = resolve(fs::current_path(), value.get<std::string>()).string();
  }
  json* node = &config;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("malformed override key: " + key);
    if (!node->is_object()) throw ConfigError("override path is not an object: " + key);
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    if (node->is_null()) *node = json::object();
    start = dot + 1;
  }
}

PipelineConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  json raw = json::object();
  fs::path base = fs::current_path();
  if (!path.empty()) {
    if (!fs::exists(path)) throw ConfigError("config file not found: " + path.string());
    std::ifstream in(path);
    try {
      raw = json::parse(in);
    } catch (const json::exception& e) {
      throw ConfigError(path.string() + ": " + e.what());
    }
    base = fs::absolute(path).parent_path();
  }
  for (const std::string& o : overrides) apply_override(raw, o);
  PipelineConfig config = PipelineConfig::from_json(raw, base);
  config.validate();
  return config;
}

json reference_synthetic_config() {
  PipelineConfig c;
  c.paths = {"annotations_train.jsonl", "annotations_dev.jsonl", "pretrain.jsonl",
             "summarization_train.jsonl", "summarization_test.jsonl", "run"};
  c.ner.epochs = 10;
  c.pretrain.initial_lr = 1e-3;
  c.pretrain.decay_interval_steps = 250;
  c.pretrain.max_steps = 500;
  c.finetune.initial_lr = 1e-3;
  c.finetune.decay_interval_steps = 150;
  return c.to_json();
}

json StageSeeds::to_json() const {
  return {{"ner", ner},
          {"model_init", model_init},
          {"corruption", corruption},
          {"pretrain_order", pretrain_order},
          {"finetune_order", finetune_order}};
}

StageSeeds stage_seeds(std::uint64_t seed) {
  auto sub = [seed](std::uint64_t index) { return Rng::derive(seed, index).next(); };
  return {sub(1), sub(2), sub(3), sub(4), sub(5)};
}

fs::path OutputLayout::arm_dir(CorruptionMode mode) const {
  return root / (mode == CorruptionMode::kMnelm ? "mnelm" : "mlm");
}

fs::path run_stage_ner(const PipelineConfig& config) {
  config.validate();
  const OutputLayout out{config.paths.output_dir};
  const StageSeeds seeds = stage_seeds(config.seed);
  std::vector<AnnotatedSentence> train = load_annotations(config.paths.annotations_train);
  std::vector<AnnotatedSentence> dev;
  if (!config.paths.annotations_dev.empty()) {
    dev = load_annotations(config.paths.annotations_dev);
  }
  write_snapshot(config);
  NerTrainingResult result = train_ner(train, dev, config.ner, seeds.ner);
  fs::create_directories(out.ner_dir());
  result.model.save(out.ner_checkpoint());

  std::ostringstream csv;
  csv << "epoch,mean_loss,dev_macro_f1\n" << std::setprecision(9);
  json history = json::array();
  for (const NerEpochStats& s : result.history) {
    csv << s.epoch << ',' << s.mean_loss << ',' << s.dev_macro_f1 << '\n';
    history.push_back(
        {{"epoch", s.epoch}, {"mean_loss", s.mean_loss}, {"dev_macro_f1", s.dev_macro_f1}});
  }
  write_text(out.ner_history(), csv.str());
  write_json(out.ner_report(), {{"seed", seeds.ner},
                                {"evaluated_on", dev.empty() ? "train" : "dev"},
                                {"best_epoch", result.best_epoch},
                                {"history", history},
                                {"report", result.best_report.to_json()}});
  return out.ner_checkpoint();
}

fs::path run_stage_corrupt(const PipelineConfig& config, CorruptionMode mode) {
  config.validate();
  const OutputLayout out{config.paths.output_dir};
  const StageSeeds seeds = stage_seeds(config.seed);
  std::optional<NerModel> ner;
  if (mode == CorruptionMode::kMnelm) {
    if (!fs::exists(out.ner_checkpoint())) {
      throw MissingCheckpoint(out.ner_checkpoint().string() +
                              " (run the entity tagger stage first)");
    }
    ner = NerModel::load(out.ner_checkpoint());
  }
  write_snapshot(config);
  std::vector<Document> docs = load_documents(config.paths.pretrain_corpus, false);
  Vocabulary vocab = build_seq2seq_vocabulary(config);
  CorruptionConfig cc;
  cc.mode = mode;
  cc.mask_probability = mask_probability(config, mode);
  cc.seed = seeds.corruption;
  cc.collapse_spans = config.corruption.collapse_spans;
  std::vector<CorruptedRecord> records(docs.size());
  corrupt_corpus(docs, vocab, ner ? &*ner : nullptr, cc,
                 [&](std::size_t i, MaskedPair pair) {
                   records[i] = {docs[i].id, std::move(pair)};
                 });
  fs::create_directories(out.arm_dir(mode));
  save_corrupted(out.corrupted(mode), records);
  return out.corrupted(mode);
}

fs::path run_stage_pretrain(const PipelineConfig& config, CorruptionMode mode) {
  const OutputLayout out{config.paths.output_dir};
  const StageSeeds seeds = stage_seeds(config.seed);
  const fs::path corrupted = run_stage_corrupt(config, mode);
  Vocabulary vocab = Vocabulary::load(out.vocabulary());
  std::vector<MaskedPair> pairs;
  for (CorruptedRecord& r : load_corrupted(corrupted, vocab)) pairs.push_back(std::move(r.pair));
  Seq2SeqModel model = init_model(config.seq2seq, std::move(vocab), seeds.model_init);
  LossCurve curve = pretrain(model, pairs, config.pretrain, seeds.pretrain_order);
  model.save(out.pretrain_checkpoint(mode));
  save_loss_curve(out.pretrain_loss(mode), curve);
  return out.pretrain_checkpoint(mode);
}

fs::path run_stage_finetune(const PipelineConfig& config, CorruptionMode mode) {
  config.validate();
  const OutputLayout out{config.paths.output_dir};
  const StageSeeds seeds = stage_seeds(config.seed);
  Seq2SeqModel model = Seq2SeqModel::load(out.pretrain_checkpoint(mode));
  std::vector<Document> docs = load_documents(config.paths.summarization_train, true);
  write_snapshot(config);
  LossCurve curve = finetune(model, docs, config.finetune, seeds.finetune_order);
  model.save(out.finetune_checkpoint(mode));
  save_loss_curve(out.finetune_loss(mode), curve);
  return out.finetune_checkpoint(mode);
}

MetricsReport run_stage_evaluate(const PipelineConfig& config, CorruptionMode mode) {
  config.validate();
  const OutputLayout out{config.paths.output_dir};
  Seq2SeqModel model = Seq2SeqModel::load(out.finetune_checkpoint(mode));
  NerModel ner = NerModel::load(out.ner_checkpoint());
  std::vector<Document> docs = load_documents(config.paths.summarization_test, true);
  MetricsReport report =
      evaluate(model, ner, docs, config.max_summary_len, std::string(mode_name(mode)));
  report.metadata = {{"mask_probability", mask_probability(config, mode)},
                     {"collapse_spans", config.corruption.collapse_spans},
                     {"seed", config.seed},
                     {"global_step", model.global_step()},
                     {"max_summary_len", config.max_summary_len}};
  write_json(out.report(mode), report.to_json());
  return report;
}

MetricsReport run_stage_finetune_and_eval(const PipelineConfig& config,
                                          CorruptionMode mode) {
  run_stage_finetune(config, mode);
  return run_stage_evaluate(config, mode);
}

void write_comparison(const PipelineConfig& config) {
  const OutputLayout out{config.paths.output_dir};
  std::vector<MetricsReport> reports;
  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    reports.push_back(MetricsReport::from_json(read_json(out.report(mode))));
  }
  write_json(out.comparison_json(), comparison_json(reports));
  write_text(out.comparison_table(), comparison_table(reports));
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(),
                                                              EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    EVP_DigestUpdate(ctx.get(), buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int size = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &size);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < size; ++i) {
    std::snprintf(byte, sizeof(byte), "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

RunManifest write_manifest(const PipelineConfig& config) {
  const OutputLayout out{config.paths.output_dir};
  const StageSeeds seeds = stage_seeds(config.seed);
  json inputs = json::object();
  auto add_input = [&](const char* role, const fs::path& p) {
    if (!p.empty()) inputs[role] = {{"path", p.string()}, {"sha256", sha256_file(p)}};
  };
  add_input("annotations_train", config.paths.annotations_train);
  add_input("annotations_dev", config.paths.annotations_dev);
  add_input("pretrain_corpus", config.paths.pretrain_corpus);
  add_input("summarization_train", config.paths.summarization_train);
  add_input("summarization_test", config.paths.summarization_test);

  json arms = json::object();
  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    arms[std::string(mode_name(mode))] = {
        {"mask_probability", mask_probability(config, mode)},
        {"collapse_spans", config.corruption.collapse_spans},
        {"seq2seq", config.seq2seq.to_json()},
        {"pretrain", mnelm::to_json(config.pretrain)},
        {"finetune", mnelm::to_json(config.finetune)},
        {"model_init_seed", seeds.model_init},
        {"corruption_seed", seeds.corruption},
        {"pretrain_order_seed", seeds.pretrain_order},
        {"finetune_order_seed", seeds.finetune_order}};
  }

  std::vector<fs::path> files;
  if (fs::exists(out.root)) {
    for (const auto& entry : fs::recursive_directory_iterator(out.root)) {
      if (!entry.is_regular_file()) continue;
      const fs::path p = entry.path();
      if (p == out.manifest() || p == out.timings()) continue;
      files.push_back(p.lexically_relative(out.root));
    }
  }
  std::sort(files.begin(), files.end(),
            [](const fs::path& a, const fs::path& b) { return a.generic_string() < b.generic_string(); });
  json artifacts = json::array();
  for (const fs::path& rel : files) {
    artifacts.push_back({{"path", rel.generic_string()},
                         {"bytes", fs::file_size(out.root / rel)},
                         {"sha256", sha256_file(out.root / rel)}});
  }

  RunManifest manifest;
  manifest.path = out.manifest();
  manifest.content = {{"manifest_version", 1},
                      {"seed", config.seed},
                      {"seeds", seeds.to_json()},
                      {"config", config.to_json()},
                      {"inputs", inputs},
                      {"arms", arms},
                      {"artifacts", artifacts}};
  write_json(manifest.path, manifest.content);
  return manifest;
}

RunManifest run_all(const PipelineConfig& config) {
  config.validate();
  const OutputLayout out{config.paths.output_dir};
  json timings = json::object();
  auto timed = [&](const std::string& name, const auto& stage) {
    const auto start = std::chrono::steady_clock::now();
    stage();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    timings[name] = seconds;
    std::ostringstream line;
    line << "[mnelm] " << name << " done in " << std::fixed << std::setprecision(1) << seconds
         << "s\n";
    std::clog << line.str() << std::flush;
  };
  write_snapshot(config);
  timed("ner", [&] { run_stage_ner(config); });
  for (CorruptionMode mode : {CorruptionMode::kMnelm, CorruptionMode::kMlm}) {
    const std::string arm(mode_name(mode));
    timed("pretrain_" + arm, [&] { run_stage_pretrain(config, mode); });
    timed("finetune_" + arm, [&] { run_stage_finetune(config, mode); });
    timed("evaluate_" + arm, [&] { run_stage_evaluate(config, mode); });
  }
  write_comparison(config);
  RunManifest manifest = write_manifest(config);
  write_json(out.timings(), timings);
  return manifest;
}

}  // namespace mnelm
