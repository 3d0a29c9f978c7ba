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

#include "mnelm/metrics.h"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "mnelm/errors.h"
#include "mnelm/ner.h"
#include "mnelm/seq2seq.h"

namespace mnelm {

using json = nlohmann::json;

std::string normalize_entity(std::string_view surface) {
  std::string out;
  bool pending_space = false;
  for (char c : surface) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += c;
  }
  return to_lower_ascii(out);
}

EntitySet extract_entity_set(std::span<const std::string> tokens,
                             std::span<const EntitySpan> spans) {
  check_spans(spans, tokens.size());
  EntitySet set;
  for (const EntitySpan& span : spans) {
    std::string joined = detokenize(tokens.subspan(span.start, span.length()));
    std::string normalized = normalize_entity(joined);
    if (!normalized.empty()) set.insert(std::move(normalized));
  }
  return set;
}

NeScores ne_scores(const EntitySet& summary_entities, const EntitySet& source_entities) {
  NeScores s;
  s.in_summary = summary_entities.size();
  s.in_source = source_entities.size();
  for (const std::string& e : summary_entities) {
    if (source_entities.count(e)) {
      ++s.correct;
    } else {
      s.hallucinated.push_back(e);
    }
  }
  if (s.in_summary > 0) {
    s.precision = static_cast<double>(s.correct) / static_cast<double>(s.in_summary);
  }
  if (s.in_source > 0) {
    s.recall = static_cast<double>(s.correct) / static_cast<double>(s.in_source);
  }
  return s;
}

std::string format_ne_line(const NeScores& scores) {
  auto fmt = [](const std::optional<double>& v) {
    if (!v) return std::string("n/a");
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", *v);
    return std::string(buf);
  };
  return "NE precision = " + fmt(scores.precision) +
         "; NE recall = " + fmt(scores.recall);
}

namespace {

double safe_ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

PrfScores make_prf(double p, double r) {
  return {p, r, p + r > 0 ? 2 * p * r / (p + r) : 0.0};
}

std::map<std::vector<std::string>, std::size_t> ngram_counts(
    std::span<const std::string> tokens, std::size_t n) {
  std::map<std::vector<std::string>, std::size_t> counts;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
    ++counts[std::vector<std::string>(tokens.begin() + i, tokens.begin() + i + n)];
  }
  return counts;
}

json optional_json(const std::optional<double>& v) {
  return v ? json(*v) : json(nullptr);
}

json prf_json(const PrfScores& s) {
  return {{"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}};
}

json ne_json(const NeScores& s) {
  return {{"precision", optional_json(s.precision)},
          {"recall", optional_json(s.recall)},
          {"correct", s.correct},
          {"in_summary", s.in_summary},
          {"in_source", s.in_source}};
}

std::optional<double> optional_from(const json& v) {
  if (v.is_null()) return std::nullopt;
  return v.get<double>();
}

PrfScores prf_from(const json& j) {
  return {j.at("precision").get<double>(), j.at("recall").get<double>(),
          j.at("f1").get<double>()};
}

}  // namespace

PrfScores rouge_n(std::span<const std::string> candidate,
                  std::span<const std::string> reference, int n) {
  if (n < 1) throw ConfigError("rouge n must be positive");
  const std::size_t size = static_cast<std::size_t>(n);
  auto cand = ngram_counts(candidate, size);
  auto ref = ngram_counts(reference, size);
  std::size_t overlap = 0;
  for (const auto& [gram, count] : cand) {
    auto it = ref.find(gram);
    if (it != ref.end()) overlap += std::min(count, it->second);
  }
  std::size_t cand_total = candidate.size() >= size ? candidate.size() - size + 1 : 0;
  std::size_t ref_total = reference.size() >= size ? reference.size() - size + 1 : 0;
  return make_prf(safe_ratio(overlap, cand_total), safe_ratio(overlap, ref_total));
}

std::size_t lcs_length(std::span<const std::string> a, std::span<const std::string> b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

PrfScores rouge_l(std::span<const std::string> candidate,
                  std::span<const std::string> reference) {
  std::size_t lcs = lcs_length(candidate, reference);
  return make_prf(safe_ratio(lcs, candidate.size()), safe_ratio(lcs, reference.size()));
}

RougeScores rouge_scores(std::span<const std::string> candidate,
                         std::span<const std::string> reference) {
  return {rouge_n(candidate, reference, 1), rouge_n(candidate, reference, 2),
          rouge_l(candidate, reference)};
}

AggregateMetrics aggregate(std::span<const DocumentMetrics> documents) {
  AggregateMetrics agg;
  agg.documents = documents.size();
  double precision_sum = 0, recall_sum = 0;
  RougeScores sum;
  auto add = [](PrfScores& into, const PrfScores& s) {
    into.precision += s.precision;
    into.recall += s.recall;
    into.f1 += s.f1;
  };
  for (const DocumentMetrics& d : documents) {
    if (d.ne.precision) {
      precision_sum += *d.ne.precision;
      ++agg.precision_documents;
    }
    if (d.ne.recall) {
      recall_sum += *d.ne.recall;
      ++agg.recall_documents;
    }
    agg.correct += d.ne.correct;
    agg.in_summary += d.ne.in_summary;
    agg.in_source += d.ne.in_source;
    add(sum.rouge1, d.rouge.rouge1);
    add(sum.rouge2, d.rouge.rouge2);
    add(sum.rouge_l, d.rouge.rouge_l);
  }
  if (agg.precision_documents > 0) {
    agg.ne_precision = precision_sum / static_cast<double>(agg.precision_documents);
  }
  if (agg.recall_documents > 0) {
    agg.ne_recall = recall_sum / static_cast<double>(agg.recall_documents);
  }
  if (!documents.empty()) {
    const double n = static_cast<double>(documents.size());
    for (PrfScores* s : {&sum.rouge1, &sum.rouge2, &sum.rouge_l}) {
      s->precision /= n;
      s->recall /= n;
      s->f1 /= n;
    }
  }
  agg.rouge = sum;
  return agg;
}

json MetricsReport::to_json() const {
  json per_doc = json::array();
  for (const DocumentMetrics& d : per_document) {
    per_doc.push_back({{"id", d.id},
                       {"generated", d.generated},
                       {"ne", ne_json(d.ne)},
                       {"rouge1", prf_json(d.rouge.rouge1)},
                       {"rouge2", prf_json(d.rouge.rouge2)},
                       {"rougeL", prf_json(d.rouge.rouge_l)},
                       {"hallucinated_entities", d.ne.hallucinated}});
  }
  json agg = {
      {"documents", aggregate.documents},
      {"ne",
       {{"precision", optional_json(aggregate.ne_precision)},
        {"recall", optional_json(aggregate.ne_recall)},
        {"precision_documents", aggregate.precision_documents},
        {"recall_documents", aggregate.recall_documents},
        {"correct", aggregate.correct},
        {"in_summary", aggregate.in_summary},
        {"in_source", aggregate.in_source}}},
      {"rouge1", prf_json(aggregate.rouge.rouge1)},
      {"rouge2", prf_json(aggregate.rouge.rouge2)},
      {"rougeL", prf_json(aggregate.rouge.rouge_l)}};
  return {{"mode", mode},
          {"metadata", metadata},
          {"aggregate", agg},
          {"per_document", per_doc}};
}

MetricsReport MetricsReport::from_json(const json& j) {
  MetricsReport report;
  try {
    report.mode = j.at("mode").get<std::string>();
    if (j.contains("metadata")) report.metadata = j.at("metadata");
    for (const json& d : j.at("per_document")) {
      DocumentMetrics m;
      m.id = d.at("id").get<std::string>();
      m.generated = d.at("generated").get<std::string>();
      const json& ne = d.at("ne");
      m.ne.precision = optional_from(ne.at("precision"));
      m.ne.recall = optional_from(ne.at("recall"));
      m.ne.correct = ne.at("correct").get<std::size_t>();
      m.ne.in_summary = ne.at("in_summary").get<std::size_t>();
      m.ne.in_source = ne.at("in_source").get<std::size_t>();
      m.ne.hallucinated = d.at("hallucinated_entities").get<std::vector<std::string>>();
      m.rouge = {prf_from(d.at("rouge1")), prf_from(d.at("rouge2")),
                 prf_from(d.at("rougeL"))};
      report.per_document.push_back(std::move(m));
    }
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("malformed metrics report: ") + e.what());
  }
  report.aggregate = mnelm::aggregate(report.per_document);
  return report;
}

MetricsReport evaluate(const Summarizer& summarize, const EntityTagger& tagger,
                       std::span<const Document> docs, std::string mode) {
  if (docs.empty()) throw EmptyDataset("evaluation set is empty");
  for (const Document& doc : docs) {
    if (!doc.summary) throw MissingSummary(doc.id);
  }
  MetricsReport report;
  report.mode = std::move(mode);
  for (const Document& doc : docs) {
    std::vector<std::string> source = tokenize(doc.text);
    std::vector<std::string> reference = tokenize(*doc.summary);
    // Round-trip through text so generated and reference tokens follow the
    // same tokenization.
    std::string generated_text = detokenize(summarize(doc));
    std::vector<std::string> generated = tokenize(generated_text);

    DocumentMetrics m;
    m.id = doc.id;
    m.generated = generated_text;
    EntitySet source_entities = extract_entity_set(source, tagger(source));
    EntitySet summary_entities = extract_entity_set(generated, tagger(generated));
    m.ne = ne_scores(summary_entities, source_entities);
    m.rouge = rouge_scores(generated, reference);
    report.per_document.push_back(std::move(m));
  }
  std::stable_sort(report.per_document.begin(), report.per_document.end(),
                   [](const DocumentMetrics& a, const DocumentMetrics& b) {
                     return a.id < b.id;
                   });
  report.aggregate = aggregate(report.per_document);
  return report;
}

MetricsReport evaluate(const Seq2SeqModel& model, const NerModel& ner,
                       std::span<const Document> docs, int max_len,
                       std::string mode) {
  Summarizer summarize = [&](const Document& doc) {
    return generate(model, tokenize(doc.text, model.vocab()), max_len).tokens;
  };
  EntityTagger tagger = [&](std::span<const std::string> tokens) {
    return ner.predict(tokens);
  };
  return evaluate(summarize, tagger, docs, std::move(mode));
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", *v);
  return buf;
}

struct Row {
  std::string metric;
  std::string variant;
  std::function<std::optional<double>(const AggregateMetrics&)> value;
};

std::vector<Row> comparison_rows() {
  std::vector<Row> rows = {
      {"NE Precision", "", [](const AggregateMetrics& a) { return a.ne_precision; }},
      {"NE Recall", "", [](const AggregateMetrics& a) { return a.ne_recall; }},
  };
  const std::pair<const char*, PrfScores RougeScores::*> variants[] = {
      {"ROUGE-1", &RougeScores::rouge1},
      {"ROUGE-2", &RougeScores::rouge2},
      {"ROUGE-L", &RougeScores::rouge_l}};
  for (const auto& [name, member] : variants) {
    rows.push_back({name, "F1", [member](const AggregateMetrics& a) {
                      return std::optional<double>((a.rouge.*member).f1);
                    }});
    rows.push_back({name, "precision", [member](const AggregateMetrics& a) {
                      return std::optional<double>((a.rouge.*member).precision);
                    }});
    rows.push_back({name, "recall", [member](const AggregateMetrics& a) {
                      return std::optional<double>((a.rouge.*member).recall);
                    }});
  }
  return rows;
}

}  // namespace

std::string comparison_table(std::span<const MetricsReport> reports) {
  std::ostringstream out;
  std::vector<Row> rows = comparison_rows();
  auto header = [&](const char* first) {
    out << "| " << first << " |";
    for (const MetricsReport& r : reports) out << ' ' << r.mode << " |";
    out << "\n|---|---|";
    for (std::size_t i = 1; i < reports.size(); ++i) out << "---|";
    out << '\n';
  };
  out << "Named entity inclusion\n\n";
  header("");
  for (std::size_t i = 0; i < 2; ++i) {
    out << "| " << rows[i].metric << " |";
    for (const MetricsReport& r : reports) out << ' ' << cell(rows[i].value(r.aggregate)) << " |";
    out << '\n';
  }
  out << "\nSummarization\n\n";
  out << "| | |";
  for (const MetricsReport& r : reports) out << ' ' << r.mode << " |";
  out << "\n|---|---|";
  for (std::size_t i = 0; i < reports.size(); ++i) out << "---|";
  out << '\n';
  for (std::size_t i = 2; i < rows.size(); ++i) {
    out << "| " << rows[i].metric << " | " << rows[i].variant << " |";
    for (const MetricsReport& r : reports) out << ' ' << cell(rows[i].value(r.aggregate)) << " |";
    out << '\n';
  }
  return out.str();
}

json comparison_json(std::span<const MetricsReport> reports) {
  json rows = json::array();
  for (const Row& row : comparison_rows()) {
    json values = json::object();
    for (const MetricsReport& r : reports) {
      values[r.mode] = optional_json(row.value(r.aggregate));
    }
    rows.push_back({{"metric", row.metric}, {"variant", row.variant}, {"values", values}});
  }
  json meta = json::object();
  for (const MetricsReport& r : reports) meta[r.mode] = r.metadata;
  return {{"rows", rows}, {"metadata", meta}};
}

}  // namespace mnelm
