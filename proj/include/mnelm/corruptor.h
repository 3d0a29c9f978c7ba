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

#ifndef MNELM_CORRUPTOR_H_
#define MNELM_CORRUPTOR_H_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mnelm/corpus.h"
#include "mnelm/ner.h"
#include "mnelm/rng.h"

namespace mnelm {

enum class CorruptionMode {
  // Mask whole named-entity spans found by the tagger.
  kMnelm,
  // Mask uniformly random token positions.
  kMlm,
};

std::string_view mode_name(CorruptionMode mode);  // "MNELM" / "MLM"
// Case-insensitive "mnelm" / "mlm"; throws ConfigError otherwise.
CorruptionMode parse_mode(std::string_view name);

struct CorruptionConfig {
  CorruptionMode mode = CorruptionMode::kMnelm;
  double mask_probability = 0.5;
  std::uint64_t seed = 0;
  // Replace each masked entity span by a single mask token. Off by default;
  // collapsed pairs no longer have equal lengths.
  bool collapse_spans = false;

  void validate() const;
};

struct MaskedPair {
  TokenSequence corrupted;
  TokenSequence original;
  // Indices into `original`, ascending.
  std::vector<int> masked_positions;

  // Equal lengths, MASK exactly at masked_positions, original elsewhere.
  bool is_consistent() const;
  bool operator==(const MaskedPair&) const = default;
};

// One Bernoulli(p) draw per span, in order of span start; a drawn span has
// every token replaced by MASK. Throws SpanError for out-of-bounds spans and
// ConfigError when config.mode is not MNELM.
MaskedPair mask_entities(const TokenSequence& tokens,
                         std::span<const EntitySpan> spans,
                         const CorruptionConfig& config, Rng& rng);

// One Bernoulli(p) draw per position. PAD, BOS, EOS and MASK positions are
// never masked. Throws ConfigError when config.mode is not MLM.
MaskedPair mask_random(const TokenSequence& tokens,
                       const CorruptionConfig& config, Rng& rng);

// Document i is corrupted with Rng::derive(config.seed, i), so the output
// does not depend on processing order. `ner` is required for MNELM and
// ignored for MLM. Pairs are delivered to `sink` in document order.
void corrupt_corpus(std::span<const Document> docs, const Vocabulary& vocab,
                    const NerModel* ner, const CorruptionConfig& config,
                    const std::function<void(std::size_t, MaskedPair)>& sink);

std::vector<MaskedPair> corrupt_corpus(std::span<const Document> docs,
                                       const Vocabulary& vocab,
                                       const NerModel* ner,
                                       const CorruptionConfig& config);

struct CorruptedRecord {
  std::string id;
  MaskedPair pair;
};

// JSON Lines: {"id", "corrupted": [int], "original": [int],
// "masked_positions": [int]}.
void save_corrupted(const std::filesystem::path& path,
                    std::span<const CorruptedRecord> records);
std::vector<CorruptedRecord> load_corrupted(const std::filesystem::path& path,
                                            const Vocabulary& vocab);

}  // namespace mnelm

#endif  // MNELM_CORRUPTOR_H_
