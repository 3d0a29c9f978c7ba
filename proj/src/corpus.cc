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

#include "mnelm/corpus.h"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <unordered_set>

#include "json.hpp"
#include "mnelm/errors.h"

namespace mnelm {

using json = nlohmann::json;

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' ||
         c == '\v';
}

// ASCII punctuation only; UTF-8 continuation bytes are word characters.
bool is_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

bool has_content(std::string_view text) {
  return std::any_of(text.begin(), text.end(),
                     [](char c) { return !is_space(c); });
}

std::ifstream open_input(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw MissingArtifact(path.string());
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  return in;
}

std::ofstream open_output(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::kOther,
                        "cannot write " + path.string());
  return out;
}

Vocabulary select_vocab(const std::unordered_map<std::string, std::size_t>& counts,
                        std::size_t max_size) {
  if (max_size < static_cast<std::size_t>(Vocabulary::kNumReserved)) {
    throw ConfigError("vocabulary size must be at least " +
                      std::to_string(Vocabulary::kNumReserved));
  }
  std::vector<std::pair<std::string, std::size_t>> ranked;
  ranked.reserve(counts.size());
  for (const auto& [token, count] : counts) {
    bool reserved = std::find(Vocabulary::kReservedTokens.begin(),
                              Vocabulary::kReservedTokens.end(),
                              token) != Vocabulary::kReservedTokens.end();
    if (!reserved) ranked.emplace_back(token, count);
  }
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  std::vector<std::string> tokens(Vocabulary::kReservedTokens.begin(),
                                  Vocabulary::kReservedTokens.end());
  std::size_t room = max_size - tokens.size();
  for (std::size_t i = 0; i < ranked.size() && i < room; ++i) {
    tokens.push_back(ranked[i].first);
  }
  return Vocabulary(std::move(tokens));
}

}  // namespace

std::string_view label_name(EntityLabel label) {
  switch (label) {
    case EntityLabel::kTask: return "Task";
    case EntityLabel::kMethod: return "Method";
    case EntityLabel::kMetric: return "Metric";
    case EntityLabel::kMaterial: return "Material";
    case EntityLabel::kOtherScientificTerm: return "Other-Scientific-Term";
    case EntityLabel::kGeneric: return "Generic";
  }
  return "?";
}

EntityLabel parse_label(std::string_view name) {
  for (EntityLabel label : kAllEntityLabels) {
    if (label_name(label) == name) return label;
  }
  if (name == "OtherScientificTerm") return EntityLabel::kOtherScientificTerm;
  throw LabelError(std::string(name));
}

std::vector<EntitySpan> normalize_spans(std::span<const EntitySpan> spans) {
  std::vector<EntitySpan> order(spans.begin(), spans.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const EntitySpan& a, const EntitySpan& b) {
                     if (a.length() != b.length()) return a.length() > b.length();
                     return a.start < b.start;
                   });
  std::vector<EntitySpan> kept;
  for (const EntitySpan& span : order) {
    bool overlaps = std::any_of(kept.begin(), kept.end(), [&](const EntitySpan& k) {
      return span.start < k.end && k.start < span.end;
    });
    if (!overlaps) kept.push_back(span);
  }
  std::sort(kept.begin(), kept.end(),
            [](const EntitySpan& a, const EntitySpan& b) { return a.start < b.start; });
  return kept;
}

void check_spans(std::span<const EntitySpan> spans, std::size_t length) {
  for (const EntitySpan& s : spans) {
    if (s.start < 0 || s.start >= s.end ||
        static_cast<std::size_t>(s.end) > length) {
      throw SpanError("span [" + std::to_string(s.start) + ", " +
                      std::to_string(s.end) + ") invalid for " +
                      std::to_string(length) + " tokens");
    }
  }
}

Vocabulary::Vocabulary()
    : Vocabulary(std::vector<std::string>(kReservedTokens.begin(),
                                          kReservedTokens.end())) {}

Vocabulary::Vocabulary(std::vector<std::string> tokens)
    : tokens_(std::move(tokens)) {
  if (tokens_.size() < static_cast<std::size_t>(kNumReserved)) {
    throw FormatError(0, "vocabulary is missing reserved tokens");
  }
  for (int i = 0; i < kNumReserved; ++i) {
    if (tokens_[i] != kReservedTokens[i]) {
      throw FormatError(static_cast<std::size_t>(i) + 1,
                        "expected reserved token " +
                            std::string(kReservedTokens[i]));
    }
  }
  index_.reserve(tokens_.size());
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second) {
      throw FormatError(i + 1, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

bool Vocabulary::contains(std::string_view token) const {
  return index_.find(std::string(token)) != index_.end();
}

int Vocabulary::id(std::string_view token) const {
  auto it = index_.find(std::string(token));
  return it == index_.end() ? kUnk : it->second;
}

const std::string& Vocabulary::token(int id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= tokens_.size()) {
    return tokens_[kUnk];
  }
  return tokens_[id];
}

TokenSequence Vocabulary::encode(std::vector<std::string> tokens) const {
  TokenSequence seq;
  seq.ids.reserve(tokens.size());
  for (const std::string& t : tokens) seq.ids.push_back(id(t));
  seq.tokens = std::move(tokens);
  return seq;
}

TokenSequence Vocabulary::from_ids(std::span<const int> ids) const {
  TokenSequence seq;
  seq.ids.assign(ids.begin(), ids.end());
  seq.tokens = decode(ids);
  return seq;
}

std::vector<std::string> Vocabulary::decode(std::span<const int> ids) const {
  std::vector<std::string> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(token(id));
  return out;
}

void Vocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out = open_output(path);
  for (const std::string& t : tokens_) out << t << '\n';
}

Vocabulary Vocabulary::load(const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) tokens.push_back(line);
  return Vocabulary(std::move(tokens));
}

std::string to_lower_ascii(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t begin = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (begin == i) break;
    std::string_view word = text.substr(begin, i - begin);

    std::size_t lead = 0;
    while (lead < word.size() && is_punct(word[lead])) ++lead;
    std::size_t trail_begin = word.size();
    while (trail_begin > lead && is_punct(word[trail_begin - 1])) --trail_begin;

    for (std::size_t k = 0; k < lead; ++k) tokens.emplace_back(1, word[k]);
    if (trail_begin > lead) {
      tokens.push_back(to_lower_ascii(word.substr(lead, trail_begin - lead)));
    }
    for (std::size_t k = trail_begin; k < word.size(); ++k) {
      tokens.emplace_back(1, word[k]);
    }
  }
  return tokens;
}

TokenSequence tokenize(std::string_view text, const Vocabulary& vocab) {
  return vocab.encode(tokenize(text));
}

std::string detokenize(std::span<const std::string> tokens) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocabulary build_vocab(std::span<const Document> corpus, std::size_t max_size) {
  if (corpus.empty()) throw EmptyCorpus();
  std::unordered_map<std::string, std::size_t> counts;
  for (const Document& doc : corpus) {
    for (std::string& t : tokenize(doc.text)) ++counts[std::move(t)];
    if (doc.summary) {
      for (std::string& t : tokenize(*doc.summary)) ++counts[std::move(t)];
    }
  }
  return select_vocab(counts, max_size);
}

Vocabulary build_vocab(std::span<const std::vector<std::string>> sentences,
                       std::size_t max_size) {
  if (sentences.empty()) throw EmptyCorpus();
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& sentence : sentences) {
    for (const std::string& t : sentence) ++counts[to_lower_ascii(t)];
  }
  return select_vocab(counts, max_size);
}

std::vector<Document> load_documents(const std::filesystem::path& path,
                                     bool expect_summaries) {
  std::ifstream in = open_input(path);
  std::vector<Document> docs;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_no, std::string("invalid json: ") + e.what());
    }
    if (!record.is_object()) throw FormatError(line_no, "expected an object");
    auto id = record.find("id");
    auto text = record.find("text");
    if (id == record.end() || !id->is_string()) {
      throw FormatError(line_no, "missing string field 'id'");
    }
    if (text == record.end() || !text->is_string()) {
      throw FormatError(line_no, "missing string field 'text'");
    }
    Document doc;
    doc.id = id->get<std::string>();
    doc.text = text->get<std::string>();
    if (doc.id.empty()) throw FormatError(line_no, "empty id");
    if (!has_content(doc.text)) throw FormatError(line_no, "empty text");
    if (!seen.insert(doc.id).second) {
      throw FormatError(line_no, "duplicate id '" + doc.id + "'");
    }
    auto summary = record.find("summary");
    if (summary != record.end() && !summary->is_null()) {
      if (!summary->is_string()) {
        throw FormatError(line_no, "'summary' must be a string or null");
      }
      doc.summary = summary->get<std::string>();
    }
    if (expect_summaries && !doc.summary) throw MissingSummary(doc.id);
    docs.push_back(std::move(doc));
  }
  return docs;
}

void save_documents(const std::filesystem::path& path,
                    std::span<const Document> docs) {
  std::ofstream out = open_output(path);
  for (const Document& doc : docs) {
    json record = {{"id", doc.id}, {"text", doc.text}};
    record["summary"] = doc.summary ? json(*doc.summary) : json(nullptr);
    out << record.dump() << '\n';
  }
}

std::vector<AnnotatedSentence> load_annotations(
    const std::filesystem::path& path) {
  std::ifstream in = open_input(path);
  std::vector<AnnotatedSentence> sentences;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw FormatError(line_no, std::string("invalid json: ") + e.what());
    }
    if (!record.is_object()) throw FormatError(line_no, "expected an object");
    AnnotatedSentence sentence;
    try {
      sentence.doc_id = record.at("doc_id").get<std::string>();
      sentence.tokens = record.at("tokens").get<std::vector<std::string>>();
      std::vector<EntitySpan> spans;
      for (const json& s : record.at("spans")) {
        EntitySpan span;
        span.start = s.at("start").get<int>();
        span.end = s.at("end").get<int>();
        span.label = parse_label(s.at("label").get<std::string>());
        spans.push_back(span);
      }
      try {
        check_spans(spans, sentence.tokens.size());
      } catch (const SpanError& e) {
        throw SpanError("line " + std::to_string(line_no) + ": " + e.what());
      }
      sentence.spans = normalize_spans(spans);
    } catch (const json::exception& e) {
      throw FormatError(line_no, std::string("bad annotation record: ") + e.what());
    }
    sentences.push_back(std::move(sentence));
  }
  return sentences;
}

void save_annotations(const std::filesystem::path& path,
                      std::span<const AnnotatedSentence> sentences) {
  std::ofstream out = open_output(path);
  for (const AnnotatedSentence& s : sentences) {
    json spans = json::array();
    for (const EntitySpan& span : s.spans) {
      spans.push_back({{"start", span.start},
                       {"end", span.end},
                       {"label", std::string(label_name(span.label))}});
    }
    json record = {{"doc_id", s.doc_id}, {"tokens", s.tokens}, {"spans", spans}};
    out << record.dump() << '\n';
  }
}

}  // namespace mnelm
