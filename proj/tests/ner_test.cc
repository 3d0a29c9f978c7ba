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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <map>
#include <set>
#include <tuple>

#include "mnelm/checkpoint.h"
#include "mnelm/errors.h"
#include "mnelm/ner.h"
#include "mnelm/synthetic.h"
#include "test_util.h"

namespace mnelm {
namespace {

using testing::TempDir;
using Spans = std::vector<EntitySpan>;
constexpr EntityLabel kTask = EntityLabel::kTask;
constexpr EntityLabel kMethod = EntityLabel::kMethod;
constexpr EntityLabel kMetric = EntityLabel::kMetric;

TagSequence tags(std::initializer_list<const char*> names) {
  TagSequence out;
  for (const char* n : names) out.push_back(parse_tag(n));
  return out;
}

// Random non-overlapping spans over `length` tokens.
Spans random_spans(Rng& rng, int length) {
  Spans spans;
  int pos = 0;
  while (pos < length) {
    pos += static_cast<int>(rng.below(3));
    if (pos >= length) break;
    int len = 1 + static_cast<int>(rng.below(3));
    int end = std::min(length, pos + len);
    spans.push_back({pos, end, static_cast<EntityLabel>(rng.below(kNumEntityLabels))});
    pos = end;
  }
  return spans;
}

NerConfig small_config() {
  NerConfig c;
  c.hidden = 32;
  c.heads = 2;
  c.layers = 1;
  c.ff_hidden = 64;
  c.max_len = 32;
  c.learning_rate = 2e-3;
  return c;
}

std::vector<AnnotatedSentence> synthetic_sentences(int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<AnnotatedSentence> out;
  for (int i = 0; i < count; ++i) out.push_back(synthetic_sentence(rng, "s" + std::to_string(i)));
  return out;
}

TEST_CASE("tag alphabet") {
  CHECK(kNumTags == 13);
  CHECK(tag_name(kOutsideTag) == "O");
  CHECK(tag_names().size() == 13);
  for (int t = 0; t < kNumTags; ++t) CHECK(parse_tag(tag_name(t)) == t);
  CHECK(tag_name(begin_tag(kMethod)) == "B-Method");
  CHECK(tag_name(inside_tag(EntityLabel::kOtherScientificTerm)) == "I-Other-Scientific-Term");
}

TEST_CASE("spans_to_bio examples") {
  CHECK(spans_to_bio(Spans{{2, 4, kMethod}}, 5) ==
        tags({"O", "O", "B-Method", "I-Method", "O"}));
  CHECK(spans_to_bio(Spans{}, 3) == tags({"O", "O", "O"}));
  CHECK(spans_to_bio(Spans{{0, 1, kTask}, {1, 3, kMetric}}, 3) ==
        tags({"B-Task", "B-Metric", "I-Metric"}));
  CHECK_THROWS_AS(spans_to_bio(Spans{{0, 2, kTask}, {1, 3, kMetric}}, 3), SpanError);
  CHECK_THROWS_AS(spans_to_bio(Spans{{2, 4, kTask}}, 3), SpanError);
}

TEST_CASE("bio_to_spans examples and repair") {
  CHECK(bio_to_spans(tags({"O", "O", "B-Method", "I-Method", "O"})) == Spans{{2, 4, kMethod}});
  CHECK(bio_to_spans(tags({"I-Task", "O"})) == Spans{{0, 1, kTask}});
  CHECK(bio_to_spans(tags({"B-Task", "I-Metric"})) == Spans{{0, 1, kTask}, {1, 2, kMetric}});
  CHECK(bio_to_spans(tags({"I-Task", "I-Task", "B-Task"})) == Spans{{0, 2, kTask}, {2, 3, kTask}});
  CHECK(bio_to_spans(TagSequence{}).empty());
  CHECK_FALSE(is_well_formed(tags({"O", "I-Task"})));
  CHECK(is_well_formed(tags({"B-Task", "I-Task", "O"})));
}

TEST_CASE("BIO round trip over random spans") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    const int length = static_cast<int>(rng.below(15));
    Spans spans = random_spans(rng, length);
    TagSequence t = spans_to_bio(spans, length);
    CHECK(is_well_formed(t));
    CHECK(bio_to_spans(t) == spans);
  }
}

TEST_CASE("repair is total and yields well-formed BIO") {
  Rng rng(22);
  for (int trial = 0; trial < 1000; ++trial) {
    TagSequence t(rng.below(12));
    for (int& tag : t) tag = static_cast<int>(rng.below(kNumTags));
    Spans spans = bio_to_spans(t);
    TagSequence fixed = spans_to_bio(spans, t.size());
    CHECK(is_well_formed(fixed));
    CHECK(bio_to_spans(fixed) == spans);
    if (is_well_formed(t)) CHECK(fixed == t);
  }
}

// Independent span-level scorer: per-label sets of (sentence, start, end).
double oracle_macro_f1(const std::vector<Spans>& pred, const std::vector<Spans>& gold) {
  double sum = 0;
  int counted = 0;
  for (EntityLabel label : kAllEntityLabels) {
    std::set<std::tuple<std::size_t, int, int>> p, g;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      for (const EntitySpan& s : pred[i]) if (s.label == label) p.insert({i, s.start, s.end});
      for (const EntitySpan& s : gold[i]) if (s.label == label) g.insert({i, s.start, s.end});
    }
    if (p.empty() && g.empty()) continue;
    double tp = 0;
    for (const auto& x : p) tp += g.count(x);
    double prec = p.empty() ? 0 : tp / p.size();
    double rec = g.empty() ? 0 : tp / g.size();
    sum += (prec + rec) == 0 ? 0 : 2 * prec * rec / (prec + rec);
    ++counted;
  }
  return counted == 0 ? 0 : sum / counted;
}

TEST_CASE("macro_f1 examples") {
  std::vector<Spans> gold = {{{0, 1, kMethod}, {2, 3, kMethod}}};
  std::vector<Spans> pred = {{{0, 1, kMethod}, {3, 4, kTask}}};
  NerEvalReport r = macro_f1(pred, gold);
  const LabelScores& method = r.per_label[static_cast<int>(kMethod)];
  CHECK(method.f1 == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
  CHECK(method.precision == 1.0);
  CHECK(method.recall == 0.5);
  CHECK(r.per_label[static_cast<int>(kTask)].f1 == 0.0);
  CHECK_FALSE(r.per_label[static_cast<int>(kMetric)].counted);
  CHECK(r.macro_f1 == doctest::Approx((2.0 / 3.0) / 2).epsilon(1e-12));

  std::vector<Spans> all;
  for (EntityLabel l : kAllEntityLabels) all.push_back({{0, 2, l}});
  CHECK(macro_f1(all, all).macro_f1 == 1.0);
  std::vector<Spans> none(all.size());
  CHECK(macro_f1(none, all).macro_f1 == 0.0);
  CHECK(macro_f1(none, none).macro_f1 == 0.0);
  CHECK_THROWS_AS(macro_f1(none, gold), LengthMismatch);
}

TEST_CASE("macro_f1 matches oracle and swaps P/R under exchange") {
  Rng rng(23);
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<Spans> pred, gold;
    const int n = 1 + static_cast<int>(rng.below(4));
    for (int i = 0; i < n; ++i) {
      gold.push_back(random_spans(rng, 8));
      pred.push_back(rng.bernoulli(0.3) ? gold.back() : random_spans(rng, 8));
    }
    NerEvalReport forward = macro_f1(pred, gold);
    NerEvalReport backward = macro_f1(gold, pred);
    CHECK(std::abs(forward.macro_f1 - oracle_macro_f1(pred, gold)) < 1e-12);
    for (std::size_t l = 0; l < kNumEntityLabels; ++l) {
      CHECK(forward.per_label[l].precision == backward.per_label[l].recall);
      CHECK(forward.per_label[l].recall == backward.per_label[l].precision);
    }
  }
}

TEST_CASE("predict_entities edge cases") {
  Vocabulary vocab({"<pad>", "<unk>", "<bos>", "<eos>", "<mask>", "a", "b"});
  NerModel model(small_config(), vocab, 5);
  CHECK(predict_entities(model, std::vector<std::string>{}).empty());

  model.network().classifier().weight.value.setZero();
  model.network().classifier().bias.value.setZero();
  const std::vector<std::string> tokens = {"a", "b", "zzz", "a"};
  CHECK(model.predict_tags(tokens) == TagSequence(4, kOutsideTag));
  CHECK(predict_entities(model, tokens).empty());
}

TEST_CASE("tagger memorizes five sentences") {
  std::vector<AnnotatedSentence> five = synthetic_sentences(5, 31);
  NerConfig config = small_config();
  config.epochs = 40;
  NerTrainingResult result = train_ner(five, five, config, 1);
  CHECK(result.best_report.macro_f1 == 1.0);
  for (const AnnotatedSentence& s : five) CHECK(predict_entities(result.model, s.tokens) == s.spans);
}

TEST_CASE("training is deterministic and checkpoints reproduce predictions") {
  std::vector<AnnotatedSentence> train = synthetic_sentences(30, 41);
  std::vector<AnnotatedSentence> dev = synthetic_sentences(10, 42);
  NerConfig config = small_config();
  config.epochs = 2;
  NerTrainingResult a = train_ner(train, dev, config, 9);
  NerTrainingResult b = train_ner(train, dev, config, 9);
  REQUIRE(a.history.size() == 2);
  for (std::size_t i = 0; i < a.history.size(); ++i) {
    CHECK(a.history[i].mean_loss == b.history[i].mean_loss);
    CHECK(a.history[i].dev_macro_f1 == b.history[i].dev_macro_f1);
  }
  CHECK(export_tensors(a.model.network()) == export_tensors(b.model.network()));

  NerTrainingResult c = train_ner(train, dev, config, 10);
  CHECK(c.history[0].mean_loss != a.history[0].mean_loss);

  TempDir dir("ner");
  a.model.save(dir / "m.ckpt");
  NerModel loaded = NerModel::load(dir / "m.ckpt");
  CHECK(loaded.config() == a.model.config());
  CHECK(loaded.vocab() == a.model.vocab());
  CHECK(export_tensors(loaded.network()) == export_tensors(a.model.network()));
  for (const AnnotatedSentence& s : dev) {
    CHECK(loaded.predict_tags(s.tokens) == a.model.predict_tags(s.tokens));
  }
  CHECK_THROWS_AS(NerModel::load(dir / "absent.ckpt"), MissingCheckpoint);
}

TEST_CASE("long inputs are tagged in windows") {
  std::vector<AnnotatedSentence> train = synthetic_sentences(60, 51);
  NerConfig config = small_config();
  config.max_len = 8;
  config.epochs = 3;
  NerTrainingResult r = train_ner(train, {}, config, 2);
  std::vector<std::string> tokens;
  for (int i = 0; i < 5; ++i) tokens.insert(tokens.end(), train[i].tokens.begin(), train[i].tokens.end());
  CHECK(r.model.predict_tags(tokens).size() == tokens.size());
}

// Majority tag per lowercased token, learned from the training split.
class MajorityBaseline {
 public:
  explicit MajorityBaseline(const std::vector<AnnotatedSentence>& train) {
    for (const AnnotatedSentence& s : train) {
      TagSequence t = spans_to_bio(s);
      for (std::size_t i = 0; i < t.size(); ++i) ++counts_[to_lower_ascii(s.tokens[i])][t[i]];
    }
  }
  Spans predict(const std::vector<std::string>& tokens) const {
    TagSequence t;
    for (const std::string& tok : tokens) {
      auto it = counts_.find(to_lower_ascii(tok));
      int best = kOutsideTag, best_count = -1;
      if (it != counts_.end()) {
        for (const auto& [tag, count] : it->second) {
          if (count > best_count) best = tag, best_count = count;
        }
      }
      t.push_back(best);
    }
    return bio_to_spans(t);
  }

 private:
  std::map<std::string, std::map<int, int>> counts_;
};

TEST_CASE("synthetic tagging reaches 0.9 macro-F1 within 10 epochs") {
  std::vector<AnnotatedSentence> train = synthetic_sentences(200, 61);
  std::vector<AnnotatedSentence> dev = synthetic_sentences(100, 62);
  MajorityBaseline baseline(train);
  std::vector<Spans> pred, gold;
  for (const AnnotatedSentence& s : dev) {
    pred.push_back(baseline.predict(s.tokens));
    gold.push_back(s.spans);
  }
  const double baseline_f1 = oracle_macro_f1(pred, gold);
  MESSAGE("majority baseline macro-F1 = " << baseline_f1);
  REQUIRE(baseline_f1 >= 0.9);

  NerConfig config;
  config.epochs = 10;
  NerTrainingResult r = train_ner(train, dev, config, 3);
  MESSAGE("tagger dev macro-F1 = " << r.best_report.macro_f1 << " at epoch " << r.best_epoch);
  CHECK(r.best_report.macro_f1 >= 0.9);
  CHECK(evaluate_ner(r.model, dev).macro_f1 == r.best_report.macro_f1);
}

TEST_CASE("config validation and json") {
  NerConfig c;
  CHECK(NerConfig::from_json(c.to_json(), NerConfig()) == c);
  c.heads = 3;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  CHECK_THROWS_AS(NerConfig::from_json({{"bogus", 1}}, NerConfig()), ConfigError);
  CHECK_THROWS_AS(train_ner({}, {}, NerConfig(), 1), EmptyDataset);
}

}  // namespace
}  // namespace mnelm
