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

#ifndef MNELM_METRICS_H_
#define MNELM_METRICS_H_

#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mnelm/corpus.h"

namespace mnelm {

class NerModel;
class Seq2SeqModel;

// Normalized entity surface forms: lowercase, internal whitespace collapsed
// to single spaces, no empty strings.
using EntitySet = std::set<std::string>;

std::string normalize_entity(std::string_view surface);

// Throws SpanError when a span is out of bounds.
EntitySet extract_entity_set(std::span<const std::string> tokens,
                             std::span<const EntitySpan> spans);

struct NeScores {
  // Undefined when the summary (precision) or source (recall) has no
  // entities.
  std::optional<double> precision;
  std::optional<double> recall;
  std::size_t correct = 0;
  std::size_t in_summary = 0;
  std::size_t in_source = 0;
  // Summary entities missing from the source, sorted.
  std::vector<std::string> hallucinated;
};

// precision = |summary & source| / |summary|,
// recall    = |summary & source| / |source|.
NeScores ne_scores(const EntitySet& summary_entities, const EntitySet& source_entities);

// "NE precision = 0.91; NE recall = 0.49", with "n/a" for undefined values.
std::string format_ne_line(const NeScores& scores);

struct PrfScores {
  double precision = 0;
  double recall = 0;
  double f1 = 0;
};

// Clipped n-gram overlap; 0/0 ratios are 0.
PrfScores rouge_n(std::span<const std::string> candidate,
                  std::span<const std::string> reference, int n);

// Longest-common-subsequence precision, recall and F1.
PrfScores rouge_l(std::span<const std::string> candidate,
                  std::span<const std::string> reference);

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b);

struct RougeScores {
  PrfScores rouge1;
  PrfScores rouge2;
  PrfScores rouge_l;
};

RougeScores rouge_scores(std::span<const std::string> candidate,
                         std::span<const std::string> reference);

struct DocumentMetrics {
  std::string id;
  std::string generated;
  NeScores ne;
  RougeScores rouge;
};

struct AggregateMetrics {
  std::size_t documents = 0;
  // Means over the documents where each value is defined.
  std::optional<double> ne_precision;
  std::optional<double> ne_recall;
  std::size_t precision_documents = 0;
  std::size_t recall_documents = 0;
  std::size_t correct = 0;
  std::size_t in_summary = 0;
  std::size_t in_source = 0;
  RougeScores rouge;
};

AggregateMetrics aggregate(std::span<const DocumentMetrics> documents);

struct MetricsReport {
  std::string mode;
  nlohmann::json metadata = nlohmann::json::object();
  // Sorted by document id.
  std::vector<DocumentMetrics> per_document;
  AggregateMetrics aggregate;

  nlohmann::json to_json() const;
  // Reads the per-document section back and recomputes the aggregate.
  // Throws FormatError on a malformed report.
  static MetricsReport from_json(const nlohmann::json& j);
};

using Summarizer = std::function<std::vector<std::string>(const Document&)>;
using EntityTagger =
    std::function<std::vector<EntitySpan>(std::span<const std::string>)>;

// Summarizes each document, tags entities in the source and in the generated
// summary with the same tagger, scores entity inclusion against the source
// and ROUGE against the reference summary. Throws EmptyDataset and
// MissingSummary.
MetricsReport evaluate(const Summarizer& summarize, const EntityTagger& tagger,
                       std::span<const Document> docs, std::string mode);

MetricsReport evaluate(const Seq2SeqModel& model, const NerModel& ner,
                       std::span<const Document> docs, int max_len,
                       std::string mode);

// Markdown tables laid out as entity-inclusion rows followed by ROUGE rows,
// one column per report.
std::string comparison_table(std::span<const MetricsReport> reports);

nlohmann::json comparison_json(std::span<const MetricsReport> reports);

}  // namespace mnelm

#endif  // MNELM_METRICS_H_
