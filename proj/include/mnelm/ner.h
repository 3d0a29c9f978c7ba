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

#ifndef MNELM_NER_H_
#define MNELM_NER_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mnelm/corpus.h"
#include "mnelm/networks.h"

namespace mnelm {

// BIO tag ids: 0 = O, B-L = 1 + 2 * L, I-L = 2 + 2 * L, L in label order.
inline constexpr int kOutsideTag = 0;
inline constexpr int kNumTags = 1 + 2 * static_cast<int>(kNumEntityLabels);

using TagSequence = std::vector<int>;

inline int begin_tag(EntityLabel label) { return 1 + 2 * static_cast<int>(label); }
inline int inside_tag(EntityLabel label) { return 2 + 2 * static_cast<int>(label); }
inline bool is_begin(int tag) { return tag > 0 && tag % 2 == 1; }
inline bool is_inside(int tag) { return tag > 0 && tag % 2 == 0; }
inline EntityLabel tag_label(int tag) { return static_cast<EntityLabel>((tag - 1) / 2); }

std::string tag_name(int tag);
int parse_tag(std::string_view name);
std::vector<std::string> tag_names();

// True when no I-L follows O, or B-M / I-M with M != L, and no sequence
// starts with I-L.
bool is_well_formed(std::span<const int> tags);

// Throws SpanError on out-of-bounds or overlapping spans.
TagSequence spans_to_bio(std::span<const EntitySpan> spans, std::size_t length);
TagSequence spans_to_bio(const AnnotatedSentence& sentence);

// Total: an I-L without a legal predecessor opens a new span as if it were
// B-L. Returns spans in order of start.
std::vector<EntitySpan> bio_to_spans(std::span<const int> tags);

struct LabelScores {
  std::size_t true_positives = 0;
  std::size_t false_positives = 0;
  std::size_t false_negatives = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  // False when the label has neither gold nor predicted spans; such labels
  // are left out of the macro mean.
  bool counted = false;
};

struct NerEvalReport {
  std::array<LabelScores, kNumEntityLabels> per_label;
  double macro_f1 = 0;

  nlohmann::json to_json() const;
};

// Span-level exact match on (start, end, label). Throws LengthMismatch when
// the two lists cover different numbers of sentences.
NerEvalReport macro_f1(std::span<const std::vector<EntitySpan>> predicted,
                       std::span<const std::vector<EntitySpan>> gold);

struct NerConfig {
  int hidden = 128;
  int heads = 4;
  int layers = 2;
  int ff_hidden = 512;
  // Training windows and the longest span tagged in one forward pass.
  int max_len = 128;
  int vocab_size = 5000;
  int epochs = 7;
  double learning_rate = 5e-4;
  double clip_norm = 1.0;

  void validate() const;
  nlohmann::json to_json() const;
  static NerConfig from_json(const nlohmann::json& j, const NerConfig& defaults);

  bool operator==(const NerConfig&) const = default;
};

class NerModel {
 public:
  NerModel(NerConfig config, Vocabulary vocab, std::uint64_t seed);

  const NerConfig& config() const { return config_; }
  const Vocabulary& vocab() const { return vocab_; }
  std::uint64_t seed() const { return seed_; }

  // Lowercased vocabulary ids.
  std::vector<int> encode(std::span<const std::string> tokens) const;

  // Argmax tag per token, lowest tag index on ties. The input is tagged one
  // sentence at a time (split after ".", "!" and "?"), and sentences longer
  // than max_len in consecutive windows.
  TagSequence predict_tags(std::span<const std::string> tokens) const;
  std::vector<EntitySpan> predict(std::span<const std::string> tokens) const;

  nn::TokenTagger<float>& network() { return network_; }
  const nn::TokenTagger<float>& network() const { return network_; }

  void save(const std::filesystem::path& path) const;
  static NerModel load(const std::filesystem::path& path);

 private:
  NerConfig config_;
  Vocabulary vocab_;
  std::uint64_t seed_;
  nn::TokenTagger<float> network_;
};

inline std::vector<EntitySpan> predict_entities(const NerModel& model,
                                                std::span<const std::string> tokens) {
  return model.predict(tokens);
}

struct NerEpochStats {
  int epoch = 0;
  double mean_loss = 0;
  double dev_macro_f1 = 0;
};

struct NerTrainingResult {
  NerModel model;
  std::vector<NerEpochStats> history;
  int best_epoch = 0;
  NerEvalReport best_report;
};

// Trains for config.epochs epochs and keeps the epoch with the best dev
// macro-F1 (earliest on ties). An empty dev set scores on the training set.
// Throws EmptyDataset when `train` has no tokens.
NerTrainingResult train_ner(std::span<const AnnotatedSentence> train,
                            std::span<const AnnotatedSentence> dev,
                            const NerConfig& config, std::uint64_t seed);

NerEvalReport evaluate_ner(const NerModel& model,
                           std::span<const AnnotatedSentence> sentences);

}  // namespace mnelm

#endif  // MNELM_NER_H_
