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

#include "mnelm/ner.h"

#include <algorithm>
#include <numeric>

#include "json_fields.h"
#include "mnelm/checkpoint.h"
#include "mnelm/errors.h"
#include "mnelm/optim.h"

namespace mnelm {

using json = nlohmann::json;

std::string tag_name(int tag) {
  if (tag == kOutsideTag) return "O";
  std::string prefix = is_begin(tag) ? "B-" : "I-";
  return prefix + std::string(label_name(tag_label(tag)));
}

int parse_tag(std::string_view name) {
  if (name == "O") return kOutsideTag;
  if (name.size() < 3 || name[1] != '-' || (name[0] != 'B' && name[0] != 'I')) {
    throw LabelError(std::string(name));
  }
  EntityLabel label = parse_label(name.substr(2));
  return name[0] == 'B' ? begin_tag(label) : inside_tag(label);
}

std::vector<std::string> tag_names() {
  std::vector<std::string> names;
  for (int t = 0; t < kNumTags; ++t) names.push_back(tag_name(t));
  return names;
}

bool is_well_formed(std::span<const int> tags) {
  int previous = kOutsideTag;
  for (int tag : tags) {
    if (is_inside(tag)) {
      if (previous == kOutsideTag || tag_label(previous) != tag_label(tag)) {
        return false;
      }
    }
    previous = tag;
  }
  return true;
}

TagSequence spans_to_bio(std::span<const EntitySpan> spans, std::size_t length) {
  check_spans(spans, length);
  TagSequence tags(length, kOutsideTag);
  std::vector<bool> covered(length, false);
  for (const EntitySpan& span : spans) {
    for (int i = span.start; i < span.end; ++i) {
      if (covered[i]) {
        throw SpanError("overlapping spans at token " + std::to_string(i));
      }
      covered[i] = true;
      tags[i] = i == span.start ? begin_tag(span.label) : inside_tag(span.label);
    }
  }
  return tags;
}

TagSequence spans_to_bio(const AnnotatedSentence& sentence) {
  return spans_to_bio(sentence.spans, sentence.tokens.size());
}

std::vector<EntitySpan> bio_to_spans(std::span<const int> tags) {
  std::vector<EntitySpan> spans;
  bool open = false;
  EntitySpan current;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    const int tag = tags[i];
    const int pos = static_cast<int>(i);
    if (tag == kOutsideTag || tag < 0 || tag >= kNumTags) {
      if (open) spans.push_back(current);
      open = false;
      continue;
    }
    const EntityLabel label = tag_label(tag);
    if (is_inside(tag) && open && current.label == label) {
      current.end = pos + 1;
      continue;
    }
    // B-L, or an I-L that cannot continue the open span.
    if (open) spans.push_back(current);
    current = EntitySpan{pos, pos + 1, label};
    open = true;
  }
  if (open) spans.push_back(current);
  return spans;
}

json NerEvalReport::to_json() const {
  json labels = json::object();
  for (EntityLabel label : kAllEntityLabels) {
    const LabelScores& s = per_label[static_cast<std::size_t>(label)];
    labels[std::string(label_name(label))] = {
        {"precision", s.precision}, {"recall", s.recall},
        {"f1", s.f1},               {"true_positives", s.true_positives},
        {"false_positives", s.false_positives},
        {"false_negatives", s.false_negatives},
        {"counted", s.counted}};
  }
  return {{"macro_f1", macro_f1}, {"per_label", labels}};
}

NerEvalReport macro_f1(std::span<const std::vector<EntitySpan>> predicted,
                       std::span<const std::vector<EntitySpan>> gold) {
  if (predicted.size() != gold.size()) {
    throw LengthMismatch(predicted.size(), gold.size());
  }
  NerEvalReport report;
  for (std::size_t s = 0; s < gold.size(); ++s) {
    for (const EntitySpan& p : predicted[s]) {
      auto& scores = report.per_label[static_cast<std::size_t>(p.label)];
      bool hit = std::find(gold[s].begin(), gold[s].end(), p) != gold[s].end();
      ++(hit ? scores.true_positives : scores.false_positives);
    }
    for (const EntitySpan& g : gold[s]) {
      bool hit = std::find(predicted[s].begin(), predicted[s].end(), g) !=
                 predicted[s].end();
      if (!hit) ++report.per_label[static_cast<std::size_t>(g.label)].false_negatives;
    }
  }
  auto ratio = [](std::size_t num, std::size_t den) {
    return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
  };
  double sum = 0;
  int counted = 0;
  for (LabelScores& s : report.per_label) {
    s.precision = ratio(s.true_positives, s.true_positives + s.false_positives);
    s.recall = ratio(s.true_positives, s.true_positives + s.false_negatives);
    s.f1 = s.precision + s.recall > 0
               ? 2 * s.precision * s.recall / (s.precision + s.recall)
               : 0.0;
    s.counted = s.true_positives + s.false_positives + s.false_negatives > 0;
    if (s.counted) {
      sum += s.f1;
      ++counted;
    }
  }
  report.macro_f1 = counted == 0 ? 0.0 : sum / counted;
  return report;
}

void NerConfig::validate() const {
  if (hidden <= 0 || heads <= 0 || layers <= 0 || ff_hidden <= 0 || max_len <= 0) {
    throw ConfigError("ner dimensions must be positive");
  }
  if (hidden % heads != 0) throw ConfigError("ner.hidden must be divisible by ner.heads");
  if (vocab_size <= Vocabulary::kNumReserved) {
    throw ConfigError("ner.vocab_size must exceed the reserved tokens");
  }
  if (epochs <= 0) throw ConfigError("ner.epochs must be positive");
  if (!(learning_rate > 0)) throw ConfigError("ner.learning_rate must be positive");
}

json NerConfig::to_json() const {
  return {{"hidden", hidden},       {"heads", heads},
          {"layers", layers},       {"ff_hidden", ff_hidden},
          {"max_len", max_len},     {"vocab_size", vocab_size},
          {"epochs", epochs},       {"learning_rate", learning_rate},
          {"clip_norm", clip_norm}};
}

NerConfig NerConfig::from_json(const json& j, const NerConfig& defaults) {
  NerConfig c = defaults;
  internal::FieldReader(j, "ner")
      .read("hidden", c.hidden)
      .read("heads", c.heads)
      .read("layers", c.layers)
      .read("ff_hidden", c.ff_hidden)
      .read("max_len", c.max_len)
      .read("vocab_size", c.vocab_size)
      .read("epochs", c.epochs)
      .read("learning_rate", c.learning_rate)
      .read("clip_norm", c.clip_norm)
      .finish();
  c.validate();
  return c;
}

namespace {

bool ends_sentence(const std::string& token) {
  return token == "." || token == "!" || token == "?";
}

nn::TaggerShape shape_for(const NerConfig& config, std::size_t vocab_size) {
  nn::TaggerShape shape;
  shape.vocab_size = static_cast<int>(vocab_size);
  shape.num_tags = kNumTags;
  shape.hidden = config.hidden;
  shape.heads = config.heads;
  shape.layers = config.layers;
  shape.ff_hidden = config.ff_hidden;
  shape.max_len = config.max_len;
  return shape;
}

// A (token ids, gold tags) training window.
struct Window {
  std::vector<int> ids;
  std::vector<int> tags;
};

std::vector<Window> make_windows(const NerModel& model,
                                 std::span<const AnnotatedSentence> sentences) {
  std::vector<Window> windows;
  const std::size_t max_len = static_cast<std::size_t>(model.config().max_len);
  for (const AnnotatedSentence& s : sentences) {
    std::vector<int> ids = model.encode(s.tokens);
    TagSequence tags = spans_to_bio(s);
    for (std::size_t begin = 0; begin < ids.size(); begin += max_len) {
      std::size_t end = std::min(ids.size(), begin + max_len);
      windows.push_back({std::vector<int>(ids.begin() + begin, ids.begin() + end),
                         std::vector<int>(tags.begin() + begin, tags.begin() + end)});
    }
  }
  return windows;
}

}  // namespace

NerModel::NerModel(NerConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(config), vocab_(std::move(vocab)), seed_(seed) {
  config_.validate();
  network_ = nn::TokenTagger<float>(shape_for(config_, vocab_.size()), seed_);
}

std::vector<int> NerModel::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const std::string& t : tokens) ids.push_back(vocab_.id(to_lower_ascii(t)));
  return ids;
}

TagSequence NerModel::predict_tags(std::span<const std::string> tokens) const {
  std::vector<int> ids = encode(tokens);
  TagSequence tags;
  tags.reserve(ids.size());
  const std::size_t max_len = static_cast<std::size_t>(config_.max_len);
  auto tag_window = [&](std::size_t begin, std::size_t end) {
    nn::Matrix<float> logits = network_.logits(
        std::span<const int>(ids).subspan(begin, end - begin), nullptr);
    for (Eigen::Index i = 0; i < logits.rows(); ++i) {
      tags.push_back(nn::argmax_row(logits, i));
    }
  };
  std::size_t begin = 0;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const bool last = i + 1 == ids.size() || ends_sentence(tokens[i]);
    if (i + 1 - begin == max_len || last) {
      tag_window(begin, i + 1);
      begin = i + 1;
    }
  }
  return tags;
}

std::vector<EntitySpan> NerModel::predict(std::span<const std::string> tokens) const {
  return bio_to_spans(predict_tags(tokens));
}

void NerModel::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.kind = Checkpoint::Kind::kTagger;
  ckpt.metadata = {{"config", config_.to_json()}, {"seed", seed_}};
  ckpt.vocabulary = vocab_.tokens();
  ckpt.labels = tag_names();
  ckpt.tensors = export_tensors(network_);
  write_checkpoint(path, ckpt);
}

NerModel NerModel::load(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != Checkpoint::Kind::kTagger) {
    throw FormatError(0, path.string() + " is not a tagger checkpoint");
  }
  if (ckpt.labels != tag_names()) {
    throw FormatError(0, "checkpoint tag set does not match this build");
  }
  NerConfig config;
  std::uint64_t seed = 0;
  try {
    config = NerConfig::from_json(ckpt.metadata.at("config"), NerConfig{});
    seed = ckpt.metadata.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("bad checkpoint metadata: ") + e.what());
  }
  NerModel model(config, Vocabulary(std::move(ckpt.vocabulary)), seed);
  import_tensors(model.network_, ckpt.tensors);
  return model;
}

NerEvalReport evaluate_ner(const NerModel& model,
                           std::span<const AnnotatedSentence> sentences) {
  std::vector<std::vector<EntitySpan>> predicted;
  std::vector<std::vector<EntitySpan>> gold;
  for (const AnnotatedSentence& s : sentences) {
    predicted.push_back(model.predict(s.tokens));
    gold.push_back(s.spans);
  }
  return macro_f1(predicted, gold);
}

NerTrainingResult train_ner(std::span<const AnnotatedSentence> train,
                            std::span<const AnnotatedSentence> dev,
                            const NerConfig& config, std::uint64_t seed) {
  config.validate();
  std::vector<std::vector<std::string>> token_lists;
  for (const AnnotatedSentence& s : train) {
    if (!s.tokens.empty()) token_lists.push_back(s.tokens);
  }
  if (token_lists.empty()) throw EmptyDataset("ner training set is empty");

  NerModel model(config, build_vocab(token_lists, config.vocab_size), seed);
  std::vector<Window> windows = make_windows(model, train);
  std::span<const AnnotatedSentence> dev_set = dev.empty() ? train : dev;

  nn::Adam<float> adam(model.network().parameters(),
                       nn::AdamOptions{.clip_norm = config.clip_norm});
  std::vector<std::size_t> order(windows.size());

  NerTrainingResult result{model, {}, 0, {}};
  double best_f1 = -1;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(epoch));
    rng.shuffle(std::span<std::size_t>(order));
    double total = 0;
    for (std::size_t idx : order) {
      total += model.network().loss(windows[idx].ids, windows[idx].tags, true);
      adam.step(config.learning_rate);
    }
    NerEvalReport report = evaluate_ner(model, dev_set);
    result.history.push_back(
        {epoch, total / static_cast<double>(windows.size()), report.macro_f1});
    if (report.macro_f1 > best_f1) {
      best_f1 = report.macro_f1;
      result.model = model;
      result.best_epoch = epoch;
      result.best_report = report;
    }
  }
  return result;
}

}  // namespace mnelm
