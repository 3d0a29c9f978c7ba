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

// Stage sequencing for the three-step training recipe:
//   1. train the entity tagger,
//   2. pretrain the encoder-decoder on entity-masked text (and, as the
//      control arm, on uniformly masked text),
//   3. fine-tune each pretrained model for summarization and evaluate it.
//
// Every stage reads its inputs from disk and writes its outputs under
// paths.output_dir, so any stage can be rerun in isolation.

#ifndef MNELM_PIPELINE_H_
#define MNELM_PIPELINE_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mnelm/corruptor.h"
#include "mnelm/metrics.h"
#include "mnelm/ner.h"
#include "mnelm/schedule.h"
#include "mnelm/seq2seq.h"

namespace mnelm {

inline constexpr int kConfigVersion = 1;

struct PipelinePaths {
  std::filesystem::path annotations_train;
  // Optional; the tagger is scored on its training set when empty.
  std::filesystem::path annotations_dev;
  std::filesystem::path pretrain_corpus;
  std::filesystem::path summarization_train;
  std::filesystem::path summarization_test;
  std::filesystem::path output_dir;
};

struct CorruptionSettings {
  double mask_probability = 0.5;
  // Masking rate of the MLM control arm.
  double mlm_mask_probability = 0.5;
  bool collapse_spans = false;
};

struct PipelineConfig {
  std::uint64_t seed = 13;
  PipelinePaths paths;
  NerConfig ner;
  CorruptionSettings corruption;
  Seq2SeqConfig seq2seq;
  TrainingSchedule pretrain = TrainingSchedule::pretraining();
  TrainingSchedule finetune = TrainingSchedule::finetuning();
  int max_summary_len = 64;

  // Every path must be absolute (see from_json) and every input must exist.
  // Throws ConfigError.
  void validate() const;

  nlohmann::json to_json() const;

  // Relative paths are resolved against `base_dir`. Missing keys take the
  // defaults above; unknown keys and version mismatches are ConfigErrors.
  static PipelineConfig from_json(const nlohmann::json& j,
                                  const std::filesystem::path& base_dir);
};

// Applies one "section.key=value" override to a raw config object. The value
// is parsed as JSON when possible and kept as a string otherwise. Relative
// path values are made absolute against the working directory.
void apply_override(nlohmann::json& config, std::string_view assignment);

// Reads `path` (may be empty for pure defaults), applies `overrides` in
// order, resolves and validates.
PipelineConfig load_config(const std::filesystem::path& path,
                           const std::vector<std::string>& overrides);

// Ready-to-run settings for the bundled synthetic corpus, paths relative to
// the directory it is written into.
nlohmann::json reference_synthetic_config();

// Seeds used by each stage; both arms share all of them.
struct StageSeeds {
  std::uint64_t ner;
  std::uint64_t model_init;
  std::uint64_t corruption;
  std::uint64_t pretrain_order;
  std::uint64_t finetune_order;

  nlohmann::json to_json() const;
};

StageSeeds stage_seeds(std::uint64_t seed);

// Output layout under paths.output_dir.
struct OutputLayout {
  std::filesystem::path root;

  std::filesystem::path config_snapshot() const { return root / "config.snapshot.json"; }
  std::filesystem::path ner_dir() const { return root / "ner"; }
  std::filesystem::path ner_checkpoint() const { return ner_dir() / "ner.ckpt"; }
  std::filesystem::path ner_report() const { return ner_dir() / "ner_eval.json"; }
  std::filesystem::path ner_history() const { return ner_dir() / "ner_history.csv"; }
  std::filesystem::path vocabulary() const { return root / "seq2seq_vocab.txt"; }
  std::filesystem::path arm_dir(CorruptionMode mode) const;
  std::filesystem::path corrupted(CorruptionMode mode) const { return arm_dir(mode) / "corrupted.jsonl"; }
  std::filesystem::path pretrain_checkpoint(CorruptionMode mode) const { return arm_dir(mode) / "pretrain.ckpt"; }
  std::filesystem::path pretrain_loss(CorruptionMode mode) const { return arm_dir(mode) / "pretrain_loss.csv"; }
  std::filesystem::path finetune_checkpoint(CorruptionMode mode) const { return arm_dir(mode) / "finetune.ckpt"; }
  std::filesystem::path finetune_loss(CorruptionMode mode) const { return arm_dir(mode) / "finetune_loss.csv"; }
  std::filesystem::path report(CorruptionMode mode) const { return arm_dir(mode) / "report.json"; }
  std::filesystem::path comparison_json() const { return root / "comparison.json"; }
  std::filesystem::path comparison_table() const { return root / "comparison.md"; }
  std::filesystem::path manifest() const { return root / "manifest.json"; }
  std::filesystem::path timings() const { return root / "timings.json"; }
};

// Stage 1. Writes the tagger checkpoint, its dev report and per-epoch
// history; returns the checkpoint path.
std::filesystem::path run_stage_ner(const PipelineConfig& config);

// Corrupts the pretraining corpus with the arm's noising function. MNELM
// needs the stage-1 checkpoint (MissingCheckpoint otherwise).
std::filesystem::path run_stage_corrupt(const PipelineConfig& config,
                                        CorruptionMode mode);

// Stage 2: corruption followed by denoising pretraining.
std::filesystem::path run_stage_pretrain(const PipelineConfig& config,
                                         CorruptionMode mode);

// Stage 3a: fine-tunes the arm's pretrained checkpoint.
std::filesystem::path run_stage_finetune(const PipelineConfig& config,
                                         CorruptionMode mode);

// Stage 3b: scores the fine-tuned model on the test split, with entities
// extracted by the stage-1 tagger.
MetricsReport run_stage_evaluate(const PipelineConfig& config, CorruptionMode mode);

MetricsReport run_stage_finetune_and_eval(const PipelineConfig& config,
                                          CorruptionMode mode);

// Writes comparison.json / comparison.md from the per-arm reports on disk.
void write_comparison(const PipelineConfig& config);

struct RunManifest {
  nlohmann::json content;
  std::filesystem::path path;
};

// Hashes the config snapshot, inputs and every stage output. Wall-clock
// timings go to timings.json so the manifest itself is reproducible.
RunManifest write_manifest(const PipelineConfig& config);

// Stage 1, then 2 -> 3 for MNELM and for the MLM control, then the
// comparison report and manifest.
RunManifest run_all(const PipelineConfig& config);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace mnelm

#endif  // MNELM_PIPELINE_H_
