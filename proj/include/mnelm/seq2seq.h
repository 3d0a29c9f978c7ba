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

#ifndef MNELM_SEQ2SEQ_H_
#define MNELM_SEQ2SEQ_H_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "json.hpp"
#include "mnelm/corpus.h"
#include "mnelm/corruptor.h"
#include "mnelm/networks.h"
#include "mnelm/schedule.h"

namespace mnelm {

struct Seq2SeqConfig {
  // Upper bound when a vocabulary is built; a model uses its actual
  // vocabulary size.
  int vocab_size = 8000;
  int hidden = 128;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ff_hidden = 512;
  // Longer sources are truncated at the token level.
  int max_source_len = 512;
  // Content tokens; EOS is appended on top of these.
  int max_target_len = 64;
  double clip_norm = 1.0;

  // Throws ConfigError on a nonpositive dimension or a vocabulary with no
  // room beyond the reserved tokens.
  void validate() const;
  nlohmann::json to_json() const;
  static Seq2SeqConfig from_json(const nlohmann::json& j,
                                 const Seq2SeqConfig& defaults);

  bool operator==(const Seq2SeqConfig&) const = default;
};

struct LossPoint {
  std::int64_t step = 0;
  double loss = 0;

  bool operator==(const LossPoint&) const = default;
};

using LossCurve = std::vector<LossPoint>;

// CSV with header "step,loss".
void save_loss_curve(const std::filesystem::path& path, const LossCurve& curve);

class Seq2SeqModel {
 public:
  // config.vocab_size is replaced by vocab.size().
  Seq2SeqModel(Seq2SeqConfig config, Vocabulary vocab, std::uint64_t seed);

  const Seq2SeqConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  // Optimizer steps applied over the model's lifetime.
  std::int64_t global_step() const { return global_step_; }
  void advance(std::int64_t steps) { global_step_ += steps; }

  nn::EncoderDecoder<float>& network() { return network_; }
  const nn::EncoderDecoder<float>& network() const { return network_; }

  // Truncated to max_source_len; an empty source becomes a lone EOS.
  std::vector<int> prepare_source(std::span<const int> ids) const;

  void save(const std::filesystem::path& path) const;
  static Seq2SeqModel load(const std::filesystem::path& path);

 private:
  Seq2SeqConfig config_;
  Vocabulary vocab_;
  std::uint64_t seed_;
  std::int64_t global_step_ = 0;
  nn::EncoderDecoder<float> network_;
};

Seq2SeqModel init_model(const Seq2SeqConfig& config, Vocabulary vocab,
                        std::uint64_t seed);

// FNV-1a over the little-endian bytes of every parameter, in order.
std::uint64_t parameter_checksum(const Seq2SeqModel& model);

// Teacher-forced mean cross-entropy of `target` (plus EOS) given `source`.
double sequence_loss(const Seq2SeqModel& model, std::span<const int> source,
                     std::span<const int> target);

// Loss of reconstructing pair.original from pair.corrupted. Equal-length
// pairs are cut to min(max_source_len, max_target_len) on both sides.
double reconstruction_loss(const Seq2SeqModel& model, const MaskedPair& pair);

// Denoising pretraining. One loss point per optimizer step; the rate at
// local step s is lr_at(schedule, s). Throws EmptyDataset.
LossCurve pretrain(Seq2SeqModel& model, std::span<const MaskedPair> pairs,
                   const TrainingSchedule& schedule, std::uint64_t seed);

// Summarization fine-tuning on (text, summary). Throws MissingSummary.
LossCurve finetune(Seq2SeqModel& model, std::span<const Document> docs,
                   const TrainingSchedule& schedule, std::uint64_t seed);

// Greedy decoding from BOS until EOS or max_len tokens (capped at
// max_target_len). The result excludes BOS and EOS.
TokenSequence generate(const Seq2SeqModel& model, const TokenSequence& source,
                       int max_len);

}  // namespace mnelm

#endif  // MNELM_SEQ2SEQ_H_
