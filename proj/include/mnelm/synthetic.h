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

// Templated scientific-abstract corpus with planted entities drawn from a
// closed gazetteer. Every sentence is emitted pre-tokenized, so the gold
// entity spans line up with tokenize() output exactly.

#ifndef MNELM_SYNTHETIC_H_
#define MNELM_SYNTHETIC_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mnelm/corpus.h"
#include "mnelm/rng.h"

namespace mnelm {

struct GazetteerEntry {
  std::string surface;
  EntityLabel label;
};

// The 20 planted entity surface forms.
const std::vector<GazetteerEntry>& gazetteer();

struct SyntheticOptions {
  std::uint64_t seed = 17;
  int ner_train_sentences = 400;
  int ner_dev_sentences = 100;
  int pretrain_documents = 500;
  int train_documents = 300;
  int test_documents = 40;
};

struct SyntheticCorpus {
  std::vector<AnnotatedSentence> ner_train;
  std::vector<AnnotatedSentence> ner_dev;
  std::vector<Document> pretrain;
  // Gold entity spans over tokenize(text) for every pretraining document,
  // keyed by doc_id.
  std::vector<AnnotatedSentence> pretrain_gold;
  std::vector<Document> train;
  std::vector<Document> test;
};

SyntheticCorpus generate_synthetic(const SyntheticOptions& options);

// One labeled sentence drawn from the templates.
AnnotatedSentence synthetic_sentence(Rng& rng, const std::string& doc_id);

// Writes annotations_train.jsonl, annotations_dev.jsonl, pretrain.jsonl,
// pretrain_gold.jsonl, summarization_train.jsonl and
// summarization_test.jsonl into `dir`, creating it if needed.
void write_synthetic(const std::filesystem::path& dir, const SyntheticCorpus& corpus);

}  // namespace mnelm

#endif  // MNELM_SYNTHETIC_H_
