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

#include "mnelm/corruptor.h"

#include <algorithm>
#include <fstream>

#include "json.hpp"
#include "mnelm/errors.h"

namespace mnelm {

using json = nlohmann::json;

std::string_view mode_name(CorruptionMode mode) {
  return mode == CorruptionMode::kMnelm ? "MNELM" : "MLM";
}

CorruptionMode parse_mode(std::string_view name) {
  std::string lower = to_lower_ascii(name);
  if (lower == "mnelm") return CorruptionMode::kMnelm;
  if (lower == "mlm") return CorruptionMode::kMlm;
  throw ConfigError("mode must be 'mnelm' or 'mlm', got '" + std::string(name) + "'");
}

void CorruptionConfig::validate() const {
  if (!(mask_probability >= 0.0 && mask_probability <= 1.0)) {
    throw ConfigError("mask probability must lie in [0, 1]");
  }
}

bool MaskedPair::is_consistent() const {
  if (corrupted.size() != original.size()) return false;
  if (corrupted.tokens.size() != corrupted.ids.size()) return false;
  if (original.tokens.size() != original.ids.size()) return false;
  if (!std::is_sorted(masked_positions.begin(), masked_positions.end())) return false;
  std::size_t next = 0;
  for (std::size_t i = 0; i < original.size(); ++i) {
    bool masked = next < masked_positions.size() &&
                  masked_positions[next] == static_cast<int>(i);
    if (masked) {
      ++next;
      if (corrupted.ids[i] != Vocabulary::kMask) return false;
    } else if (corrupted.ids[i] != original.ids[i]) {
      return false;
    }
  }
  return next == masked_positions.size();
}

namespace {

void set_mask(TokenSequence& seq, std::size_t i) {
  seq.ids[i] = Vocabulary::kMask;
  seq.tokens[i] = std::string(Vocabulary::kReservedTokens[Vocabulary::kMask]);
}

}  // namespace

MaskedPair mask_entities(const TokenSequence& tokens,
                         std::span<const EntitySpan> spans,
                         const CorruptionConfig& config, Rng& rng) {
  config.validate();
  if (config.mode != CorruptionMode::kMnelm) {
    throw ConfigError("mask_entities requires MNELM mode");
  }
  check_spans(spans, tokens.size());
  std::vector<EntitySpan> ordered(spans.begin(), spans.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });

  std::vector<bool> masked(tokens.size(), false);
  std::vector<bool> span_start(tokens.size(), false);
  for (const EntitySpan& span : ordered) {
    if (!rng.bernoulli(config.mask_probability)) continue;
    span_start[span.start] = true;
    for (int i = span.start; i < span.end; ++i) masked[i] = true;
  }

  MaskedPair pair;
  pair.original = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (masked[i]) pair.masked_positions.push_back(static_cast<int>(i));
  }
  if (!config.collapse_spans) {
    pair.corrupted = tokens;
    for (int i : pair.masked_positions) set_mask(pair.corrupted, i);
    return pair;
  }
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (!masked[i]) {
      pair.corrupted.tokens.push_back(tokens.tokens[i]);
      pair.corrupted.ids.push_back(tokens.ids[i]);
    } else if (span_start[i] || i == 0 || !masked[i - 1]) {
      pair.corrupted.tokens.emplace_back(Vocabulary::kReservedTokens[Vocabulary::kMask]);
      pair.corrupted.ids.push_back(Vocabulary::kMask);
    }
  }
  return pair;
}

MaskedPair mask_random(const TokenSequence& tokens,
                       const CorruptionConfig& config, Rng& rng) {
  config.validate();
  if (config.mode != CorruptionMode::kMlm) {
    throw ConfigError("mask_random requires MLM mode");
  }
  MaskedPair pair;
  pair.original = tokens;
  pair.corrupted = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const int id = tokens.ids[i];
    if (id == Vocabulary::kPad || id == Vocabulary::kBos ||
        id == Vocabulary::kEos || id == Vocabulary::kMask) {
      continue;
    }
    if (rng.bernoulli(config.mask_probability)) {
      pair.masked_positions.push_back(static_cast<int>(i));
      set_mask(pair.corrupted, i);
    }
  }
  return pair;
}

void corrupt_corpus(std::span<const Document> docs, const Vocabulary& vocab,
                    const NerModel* ner, const CorruptionConfig& config,
                    const std::function<void(std::size_t, MaskedPair)>& sink) {
  config.validate();
  if (config.mode == CorruptionMode::kMnelm && ner == nullptr) {
    throw MissingCheckpoint("MNELM corruption needs a trained tagger");
  }
  for (std::size_t i = 0; i < docs.size(); ++i) {
    TokenSequence tokens = tokenize(docs[i].text, vocab);
    Rng rng = Rng::derive(config.seed, i);
    if (config.mode == CorruptionMode::kMnelm) {
      std::vector<EntitySpan> spans = ner->predict(tokens.tokens);
      sink(i, mask_entities(tokens, spans, config, rng));
    } else {
      sink(i, mask_random(tokens, config, rng));
    }
  }
}

std::vector<MaskedPair> corrupt_corpus(std::span<const Document> docs,
                                       const Vocabulary& vocab,
                                       const NerModel* ner,
                                       const CorruptionConfig& config) {
  std::vector<MaskedPair> pairs;
  pairs.reserve(docs.size());
  corrupt_corpus(docs, vocab, ner, config,
                 [&](std::size_t, MaskedPair pair) { pairs.push_back(std::move(pair)); });
  return pairs;
}

void save_corrupted(const std::filesystem::path& path,
                    std::span<const CorruptedRecord> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::kOther, "cannot write " + path.string());
  for (const CorruptedRecord& r : records) {
    json record = {{"id", r.id},
                   {"corrupted", r.pair.corrupted.ids},
                   {"original", r.pair.original.ids},
                   {"masked_positions", r.pair.masked_positions}};
    out << record.dump() << '\n';
  }
}

std::vector<CorruptedRecord> load_corrupted(const std::filesystem::path& path,
                                            const Vocabulary& vocab) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact(path.string());
  std::vector<CorruptedRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    CorruptedRecord r;
    try {
      json record = json::parse(line);
      r.id = record.at("id").get<std::string>();
      auto corrupted = record.at("corrupted").get<std::vector<int>>();
      auto original = record.at("original").get<std::vector<int>>();
      r.pair.masked_positions = record.at("masked_positions").get<std::vector<int>>();
      for (int id : corrupted) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
          throw FormatError(line_no, "token id out of vocabulary range");
        }
      }
      for (int id : original) {
        if (id < 0 || static_cast<std::size_t>(id) >= vocab.size()) {
          throw FormatError(line_no, "token id out of vocabulary range");
        }
      }
      r.pair.corrupted = vocab.from_ids(corrupted);
      r.pair.original = vocab.from_ids(original);
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("bad corrupted record: ") + e.what());
    }
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace mnelm
