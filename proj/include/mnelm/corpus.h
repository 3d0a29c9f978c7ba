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

#ifndef MNELM_CORPUS_H_
#define MNELM_CORPUS_H_

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mnelm {

// A source text with an optional reference summary (the article abstract for
// the ArXiv-style corpora).
struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> summary;

  bool operator==(const Document&) const = default;
};

// The closed SCIERC label set.
enum class EntityLabel : std::uint8_t {
  kTask = 0,
  kMethod,
  kMetric,
  kMaterial,
  kOtherScientificTerm,
  kGeneric,
};

inline constexpr std::size_t kNumEntityLabels = 6;

inline constexpr std::array<EntityLabel, kNumEntityLabels> kAllEntityLabels = {
    EntityLabel::kTask,     EntityLabel::kMethod,
    EntityLabel::kMetric,   EntityLabel::kMaterial,
    EntityLabel::kOtherScientificTerm, EntityLabel::kGeneric};

std::string_view label_name(EntityLabel label);

// Accepts the canonical names plus "OtherScientificTerm", the spelling used
// in the released SCIERC json files. Throws LabelError otherwise.
EntityLabel parse_label(std::string_view name);

// Half-open token range [start, end) carrying one entity label.
struct EntitySpan {
  int start = 0;
  int end = 0;
  EntityLabel label = EntityLabel::kTask;

  int length() const { return end - start; }
  bool operator==(const EntitySpan&) const = default;
};

struct AnnotatedSentence {
  std::string doc_id;
  std::vector<std::string> tokens;
  std::vector<EntitySpan> spans;

  bool operator==(const AnnotatedSentence&) const = default;
};

// Resolves nesting and overlaps: the longer span wins, ties go to the
// earlier start, exact duplicates collapse. Output is sorted by start.
std::vector<EntitySpan> normalize_spans(std::span<const EntitySpan> spans);

// Throws SpanError unless every span satisfies 0 <= start < end <= length.
void check_spans(std::span<const EntitySpan> spans, std::size_t length);

struct TokenSequence {
  std::vector<std::string> tokens;
  std::vector<int> ids;

  std::size_t size() const { return ids.size(); }
  bool operator==(const TokenSequence&) const = default;
};

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kBos = 2;
  static constexpr int kEos = 3;
  static constexpr int kMask = 4;
  static constexpr int kNumReserved = 5;

  static constexpr std::array<std::string_view, kNumReserved> kReservedTokens =
      {"<pad>", "<unk>", "<bos>", "<eos>", "<mask>"};

  // Reserved tokens only.
  Vocabulary();

  // `tokens` must start with the five reserved tokens and be duplicate-free.
  explicit Vocabulary(std::vector<std::string> tokens);

  std::size_t size() const { return tokens_.size(); }
  bool contains(std::string_view token) const;

  // UNK for out-of-vocabulary tokens.
  int id(std::string_view token) const;
  const std::string& token(int id) const;
  const std::vector<std::string>& tokens() const { return tokens_; }

  TokenSequence encode(std::vector<std::string> tokens) const;
  TokenSequence from_ids(std::span<const int> ids) const;
  std::vector<std::string> decode(std::span<const int> ids) const;

  static bool is_reserved(int id) { return id >= 0 && id < kNumReserved; }

  // One token per line, line number = index.
  void save(const std::filesystem::path& path) const;
  static Vocabulary load(const std::filesystem::path& path);

  bool operator==(const Vocabulary& other) const {
    return tokens_ == other.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

// Lowercase, split on whitespace, then peel leading and trailing punctuation
// characters off each word as single-character tokens. Intra-word
// punctuation ("self-protection", "3.5") stays attached.
std::vector<std::string> tokenize(std::string_view text);

// tokenize() followed by id lookup.
TokenSequence tokenize(std::string_view text, const Vocabulary& vocab);

// Tokens joined with single spaces.
std::string detokenize(std::span<const std::string> tokens);

// Reserved tokens plus the (max_size - 5) most frequent tokens, ties broken
// lexicographically. Counts document text and, when present, the summary.
Vocabulary build_vocab(std::span<const Document> corpus, std::size_t max_size);

// Same selection rule over pre-tokenized sentences. Tokens are lowercased.
Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences,
                       std::size_t max_size);

// JSON Lines: {"id": string, "text": string, "summary": string|null}.
std::vector<Document> load_documents(const std::filesystem::path& path,
                                     bool expect_summaries);
void save_documents(const std::filesystem::path& path,
                    std::span<const Document> docs);

// JSON Lines: {"doc_id", "tokens": [..], "spans": [{"start","end","label"}]}.
std::vector<AnnotatedSentence> load_annotations(
    const std::filesystem::path& path);
void save_annotations(const std::filesystem::path& path,
                      std::span<const AnnotatedSentence> sentences);

std::string to_lower_ascii(std::string_view s);

}  // namespace mnelm

#endif  // MNELM_CORPUS_H_
