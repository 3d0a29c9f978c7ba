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

#include "mnelm/synthetic.h"

#include <map>
#include <sstream>

namespace mnelm {
namespace {

// Slots: {task} {method} {metric} {material} {term} {generic} {noun} {adj}.
const std::vector<std::string>& sentence_templates() {
  static const std::vector<std::string> templates = {
      "we propose a new {method} for {task} .",
      "our {generic} improves {metric} on {material} .",
      "experiments on {material} show that {method} outperforms prior work .",
      "the {term} of the {method} are analyzed in detail .",
      "we evaluate {task} using {metric} .",
      "this {generic} relies on {term} learned from {material} .",
      "results indicate that {method} reduces errors for {task} .",
      "we study the {adj} {noun} of {task} .",
      "a {adj} {noun} is introduced to stabilize {method} .",
      "finally , we discuss the {noun} and the {noun} .",
      "compared with {method} , the proposed {generic} is {adj} .",
      "the {adj} {noun} depends on {term} .",
      "we report {metric} for every {noun} .",
      "{material} provides a {adj} benchmark for {task} .",
      "in addition , {term} reveal a {adj} {noun} .",
      "our analysis of {noun} suggests {adj} trends .",
      "we propose {method} for {task} and report {metric} on {material} .",
      "we apply {method} to {task} with {term} .",
  };
  return templates;
}

const std::vector<std::string>& nouns() {
  static const std::vector<std::string> words = {
      "baseline", "setting", "limitation", "framework", "property", "variant",
      "parameter", "component", "objective", "constraint", "strategy", "module",
      "pipeline", "benchmark", "feature", "signal", "domain", "sample",
      "structure", "pattern", "tradeoff", "behavior", "algorithm", "estimate",
      "heuristic", "regime", "criterion", "mechanism", "configuration", "bias",
      "complexity", "robustness", "efficiency", "scalability", "granularity",
      "budget", "threshold", "schedule", "protocol", "representation",
      "distribution", "formulation", "assumption", "procedure", "dimension",
      "regularizer", "prior", "kernel", "layer", "encoder"};
  return words;
}

const std::vector<std::string>& adjectives() {
  static const std::vector<std::string> words = {
      "simple", "robust", "efficient", "novel", "strong", "stable", "sparse",
      "dense", "scalable", "accurate", "compact", "flexible", "modular",
      "expensive", "practical", "theoretical", "empirical", "consistent",
      "large", "small", "general", "specific", "fast", "slow", "deep",
      "shallow", "noisy", "clean", "hierarchical", "adaptive"};
  return words;
}

const std::map<std::string, EntityLabel>& slot_labels() {
  static const std::map<std::string, EntityLabel> slots = {
      {"task", EntityLabel::kTask},
      {"method", EntityLabel::kMethod},
      {"metric", EntityLabel::kMetric},
      {"material", EntityLabel::kMaterial},
      {"term", EntityLabel::kOtherScientificTerm},
      {"generic", EntityLabel::kGeneric}};
  return slots;
}

std::vector<const GazetteerEntry*> entries_with(EntityLabel label) {
  std::vector<const GazetteerEntry*> out;
  for (const GazetteerEntry& e : gazetteer()) {
    if (e.label == label) out.push_back(&e);
  }
  return out;
}

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[rng.below(items.size())];
}

// Fills `tmpl`, taking entity slots from `fixed` when present there and
// drawing them otherwise.
AnnotatedSentence fill(const std::string& tmpl, Rng& rng,
                       const std::map<std::string, std::string>& fixed,
                       const std::string& doc_id) {
  AnnotatedSentence s;
  s.doc_id = doc_id;
  std::istringstream words(tmpl);
  std::string word;
  while (words >> word) {
    if (word.size() < 3 || word.front() != '{' || word.back() != '}') {
      s.tokens.push_back(word);
      continue;
    }
    std::string slot = word.substr(1, word.size() - 2);
    std::string surface;
    if (slot == "noun") {
      surface = pick(rng, nouns());
    } else if (slot == "adj") {
      surface = pick(rng, adjectives());
    } else {
      EntityLabel label = slot_labels().at(slot);
      auto it = fixed.find(slot);
      surface = it != fixed.end() ? it->second : pick(rng, entries_with(label))->surface;
      int start = static_cast<int>(s.tokens.size());
      std::istringstream parts(surface);
      std::string part;
      while (parts >> part) s.tokens.push_back(part);
      s.spans.push_back({start, static_cast<int>(s.tokens.size()), label});
      continue;
    }
    s.tokens.push_back(surface);
  }
  return s;
}

struct SyntheticDocument {
  Document doc;
  AnnotatedSentence gold;
};

SyntheticDocument make_document(Rng& rng, const std::string& id) {
  std::map<std::string, std::string> key;
  for (const auto& [slot, label] : slot_labels()) {
    key[slot] = pick(rng, entries_with(label))->surface;
  }
  std::vector<AnnotatedSentence> sentences;
  sentences.push_back(fill("we propose a new {method} for {task} .", rng, key, id));
  sentences.push_back(fill("we evaluate {task} using {metric} on {material} .", rng, key, id));
  const int extra = 2 + static_cast<int>(rng.below(3));
  for (int i = 0; i < extra; ++i) {
    sentences.push_back(fill(pick(rng, sentence_templates()), rng, {}, id));
  }

  SyntheticDocument out;
  out.gold.doc_id = id;
  for (const AnnotatedSentence& s : sentences) {
    const int offset = static_cast<int>(out.gold.tokens.size());
    out.gold.tokens.insert(out.gold.tokens.end(), s.tokens.begin(), s.tokens.end());
    for (EntitySpan span : s.spans) {
      span.start += offset;
      span.end += offset;
      out.gold.spans.push_back(span);
    }
  }
  out.doc.id = id;
  out.doc.text = detokenize(out.gold.tokens);
  out.doc.summary = "we propose " + key["method"] + " for " + key["task"] +
                    " and report " + key["metric"] + " on " + key["material"] + " .";
  return out;
}

std::string numbered(const char* prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s-%05d", prefix, i);
  return buf;
}

}  // namespace

const std::vector<GazetteerEntry>& gazetteer() {
  static const std::vector<GazetteerEntry> entries = {
      {"machine translation", EntityLabel::kTask},
      {"object detection", EntityLabel::kTask},
      {"speech recognition", EntityLabel::kTask},
      {"text summarization", EntityLabel::kTask},
      {"support vector machine", EntityLabel::kMethod},
      {"convolutional neural network", EntityLabel::kMethod},
      {"gradient descent", EntityLabel::kMethod},
      {"random forest", EntityLabel::kMethod},
      {"transformer model", EntityLabel::kMethod},
      {"bleu score", EntityLabel::kMetric},
      {"word error rate", EntityLabel::kMetric},
      {"f1 score", EntityLabel::kMetric},
      {"imagenet", EntityLabel::kMaterial},
      {"penn treebank", EntityLabel::kMaterial},
      {"wikipedia corpus", EntityLabel::kMaterial},
      {"attention weights", EntityLabel::kOtherScientificTerm},
      {"hidden states", EntityLabel::kOtherScientificTerm},
      {"loss surface", EntityLabel::kOtherScientificTerm},
      {"approach", EntityLabel::kGeneric},
      {"system", EntityLabel::kGeneric},
  };
  return entries;
}

AnnotatedSentence synthetic_sentence(Rng& rng, const std::string& doc_id) {
  return fill(pick(rng, sentence_templates()), rng, {}, doc_id);
}

SyntheticCorpus generate_synthetic(const SyntheticOptions& options) {
  SyntheticCorpus corpus;
  Rng ner_rng = Rng::derive(options.seed, 1);
  for (int i = 0; i < options.ner_train_sentences; ++i) {
    corpus.ner_train.push_back(synthetic_sentence(ner_rng, numbered("ner-train", i)));
  }
  Rng dev_rng = Rng::derive(options.seed, 2);
  for (int i = 0; i < options.ner_dev_sentences; ++i) {
    corpus.ner_dev.push_back(synthetic_sentence(dev_rng, numbered("ner-dev", i)));
  }
  Rng doc_rng = Rng::derive(options.seed, 3);
  for (int i = 0; i < options.pretrain_documents; ++i) {
    SyntheticDocument d = make_document(doc_rng, numbered("pretrain", i));
    d.doc.summary.reset();
    corpus.pretrain.push_back(std::move(d.doc));
    corpus.pretrain_gold.push_back(std::move(d.gold));
  }
  Rng train_rng = Rng::derive(options.seed, 4);
  for (int i = 0; i < options.train_documents; ++i) {
    corpus.train.push_back(make_document(train_rng, numbered("train", i)).doc);
  }
  Rng test_rng = Rng::derive(options.seed, 5);
  for (int i = 0; i < options.test_documents; ++i) {
    corpus.test.push_back(make_document(test_rng, numbered("test", i)).doc);
  }
  return corpus;
}

void write_synthetic(const std::filesystem::path& dir, const SyntheticCorpus& corpus) {
  std::filesystem::create_directories(dir);
  save_annotations(dir / "annotations_train.jsonl", corpus.ner_train);
  save_annotations(dir / "annotations_dev.jsonl", corpus.ner_dev);
  save_documents(dir / "pretrain.jsonl", corpus.pretrain);
  save_annotations(dir / "pretrain_gold.jsonl", corpus.pretrain_gold);
  save_documents(dir / "summarization_train.jsonl", corpus.train);
  save_documents(dir / "summarization_test.jsonl", corpus.test);
}

}  // namespace mnelm
