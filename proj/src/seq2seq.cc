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

#include "mnelm/seq2seq.h"

#include <algorithm>
#include <bit>
#include <fstream>
#include <iomanip>
#include <numeric>

#include "json_fields.h"
#include "mnelm/checkpoint.h"
#include "mnelm/errors.h"
#include "mnelm/optim.h"

namespace mnelm {

using json = nlohmann::json;

void Seq2SeqConfig::validate() const {
  if (hidden <= 0 || heads <= 0 || encoder_layers <= 0 || decoder_layers <= 0 ||
      ff_hidden <= 0 || max_source_len <= 0 || max_target_len <= 0) {
    throw ConfigError("seq2seq dimensions must be positive");
  }
  if (hidden % heads != 0) {
    throw ConfigError("seq2seq.hidden must be divisible by seq2seq.heads");
  }
  if (vocab_size <= Vocabulary::kNumReserved) {
    throw ConfigError("seq2seq vocabulary needs at least one non-reserved token");
  }
}

json Seq2SeqConfig::to_json() const {
  return {{"vocab_size", vocab_size},
          {"hidden", hidden},
          {"heads", heads},
          {"encoder_layers", encoder_layers},
          {"decoder_layers", decoder_layers},
          {"ff_hidden", ff_hidden},
          {"max_source_len", max_source_len},
          {"max_target_len", max_target_len},
          {"clip_norm", clip_norm}};
}

Seq2SeqConfig Seq2SeqConfig::from_json(const json& j, const Seq2SeqConfig& defaults) {
  Seq2SeqConfig c = defaults;
  internal::FieldReader(j, "seq2seq")
      .read("vocab_size", c.vocab_size)
      .read("hidden", c.hidden)
      .read("heads", c.heads)
      .read("encoder_layers", c.encoder_layers)
      .read("decoder_layers", c.decoder_layers)
      .read("ff_hidden", c.ff_hidden)
      .read("max_source_len", c.max_source_len)
      .read("max_target_len", c.max_target_len)
      .read("clip_norm", c.clip_norm)
      .finish();
  c.validate();
  return c;
}

void save_loss_curve(const std::filesystem::path& path, const LossCurve& curve) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::kOther, "cannot write " + path.string());
  out << "step,loss\n";
  out << std::setprecision(9);
  for (const LossPoint& p : curve) out << p.step << ',' << p.loss << '\n';
}

namespace {

nn::EncoderDecoderShape shape_for(const Seq2SeqConfig& c) {
  nn::EncoderDecoderShape shape;
  shape.vocab_size = c.vocab_size;
  shape.hidden = c.hidden;
  shape.heads = c.heads;
  shape.encoder_layers = c.encoder_layers;
  shape.decoder_layers = c.decoder_layers;
  shape.ff_hidden = c.ff_hidden;
  shape.max_source_len = c.max_source_len;
  shape.max_target_len = c.max_target_len;
  return shape;
}

Seq2SeqConfig bind_vocab(Seq2SeqConfig config, const Vocabulary& vocab) {
  config.vocab_size = static_cast<int>(vocab.size());
  config.validate();
  return config;
}

// Teacher-forcing example: decoder input [BOS, t...], output [t..., EOS].
struct Example {
  std::vector<int> source;
  std::vector<int> decoder_input;
  std::vector<int> targets;
};

Example make_example(const Seq2SeqModel& model, std::span<const int> source,
                     std::span<const int> target) {
  Example ex;
  ex.source = model.prepare_source(source);
  std::size_t n = std::min(target.size(),
                           static_cast<std::size_t>(model.config().max_target_len));
  ex.decoder_input.push_back(Vocabulary::kBos);
  ex.decoder_input.insert(ex.decoder_input.end(), target.begin(), target.begin() + n);
  ex.targets.assign(target.begin(), target.begin() + n);
  ex.targets.push_back(Vocabulary::kEos);
  return ex;
}

Example make_reconstruction_example(const Seq2SeqModel& model, const MaskedPair& pair) {
  std::span<const int> source = pair.corrupted.ids;
  std::span<const int> target = pair.original.ids;
  if (source.size() == target.size()) {
    std::size_t limit = static_cast<std::size_t>(
        std::min(model.config().max_source_len, model.config().max_target_len));
    std::size_t n = std::min(source.size(), limit);
    source = source.first(n);
    target = target.first(n);
  }
  return make_example(model, source, target);
}

LossCurve train_examples(Seq2SeqModel& model, const std::vector<Example>& examples,
                         const TrainingSchedule& schedule, std::uint64_t seed) {
  schedule.validate();
  if (examples.empty()) throw EmptyDataset("no training examples");
  const std::int64_t total = total_steps(schedule, examples.size());
  const std::size_t batch = static_cast<std::size_t>(schedule.batch_size);

  nn::Adam<float> adam(model.network().parameters(),
                       nn::AdamOptions{.clip_norm = model.config().clip_norm});
  std::vector<std::size_t> order(examples.size());
  std::size_t cursor = order.size();
  std::uint64_t epoch = 0;

  LossCurve curve;
  curve.reserve(static_cast<std::size_t>(total));
  for (std::int64_t step = 0; step < total; ++step) {
    double batch_loss = 0;
    for (std::size_t b = 0; b < batch; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), 0);
        Rng rng = Rng::derive(seed, epoch++);
        rng.shuffle(std::span<std::size_t>(order));
        cursor = 0;
      }
      const Example& ex = examples[order[cursor++]];
      batch_loss += model.network().loss(ex.source, ex.decoder_input, ex.targets,
                                         true, 1.0f / static_cast<float>(batch));
    }
    adam.step(lr_at(schedule, step));
    curve.push_back({step, batch_loss / static_cast<double>(batch)});
  }
  model.advance(total);
  return curve;
}

}  // namespace

Seq2SeqModel::Seq2SeqModel(Seq2SeqConfig config, Vocabulary vocab, std::uint64_t seed)
    : config_(bind_vocab(config, vocab)),
      vocab_(std::move(vocab)),
      seed_(seed),
      network_(shape_for(config_), seed) {}

std::vector<int> Seq2SeqModel::prepare_source(std::span<const int> ids) const {
  std::size_t n = std::min(ids.size(), static_cast<std::size_t>(config_.max_source_len));
  if (n == 0) return {Vocabulary::kEos};
  return std::vector<int>(ids.begin(), ids.begin() + n);
}

void Seq2SeqModel::save(const std::filesystem::path& path) const {
  Checkpoint ckpt;
  ckpt.kind = Checkpoint::Kind::kEncoderDecoder;
  ckpt.metadata = {{"config", config_.to_json()},
                   {"seed", seed_},
                   {"global_step", global_step_}};
  ckpt.vocabulary = vocab_.tokens();
  ckpt.tensors = export_tensors(network_);
  write_checkpoint(path, ckpt);
}

Seq2SeqModel Seq2SeqModel::load(const std::filesystem::path& path) {
  Checkpoint ckpt = read_checkpoint(path);
  if (ckpt.kind != Checkpoint::Kind::kEncoderDecoder) {
    throw FormatError(0, path.string() + " is not an encoder-decoder checkpoint");
  }
  Seq2SeqConfig config;
  std::uint64_t seed = 0;
  std::int64_t step = 0;
  try {
    config = Seq2SeqConfig::from_json(ckpt.metadata.at("config"), Seq2SeqConfig{});
    seed = ckpt.metadata.at("seed").get<std::uint64_t>();
    step = ckpt.metadata.at("global_step").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw FormatError(0, std::string("bad checkpoint metadata: ") + e.what());
  }
  Seq2SeqModel model(config, Vocabulary(std::move(ckpt.vocabulary)), seed);
  import_tensors(model.network_, ckpt.tensors);
  model.global_step_ = step;
  return model;
}

Seq2SeqModel init_model(const Seq2SeqConfig& config, Vocabulary vocab,
                        std::uint64_t seed) {
  return Seq2SeqModel(config, std::move(vocab), seed);
}

std::uint64_t parameter_checksum(const Seq2SeqModel& model) {
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  model.network().for_each_parameter([&](const nn::Parameter<float>& p) {
    for (Eigen::Index i = 0; i < p.value.size(); ++i) {
      std::uint32_t bits = std::bit_cast<std::uint32_t>(p.value.data()[i]);
      for (int b = 0; b < 4; ++b) {
        hash ^= (bits >> (8 * b)) & 0xFF;
        hash *= 0x100000001b3ULL;
      }
    }
  });
  return hash;
}

double sequence_loss(const Seq2SeqModel& model, std::span<const int> source,
                     std::span<const int> target) {
  Example ex = make_example(model, source, target);
  return model.network().evaluate(ex.source, ex.decoder_input, ex.targets);
}

double reconstruction_loss(const Seq2SeqModel& model, const MaskedPair& pair) {
  Example ex = make_reconstruction_example(model, pair);
  return model.network().evaluate(ex.source, ex.decoder_input, ex.targets);
}

LossCurve pretrain(Seq2SeqModel& model, std::span<const MaskedPair> pairs,
                   const TrainingSchedule& schedule, std::uint64_t seed) {
  if (pairs.empty()) throw EmptyDataset("pretraining stream is empty");
  std::vector<Example> examples;
  examples.reserve(pairs.size());
  for (const MaskedPair& pair : pairs) {
    examples.push_back(make_reconstruction_example(model, pair));
  }
  return train_examples(model, examples, schedule, seed);
}

LossCurve finetune(Seq2SeqModel& model, std::span<const Document> docs,
                   const TrainingSchedule& schedule, std::uint64_t seed) {
  if (docs.empty()) throw EmptyDataset("fine-tuning set is empty");
  std::vector<Example> examples;
  examples.reserve(docs.size());
  for (const Document& doc : docs) {
    if (!doc.summary) throw MissingSummary(doc.id);
    TokenSequence source = tokenize(doc.text, model.vocab());
    TokenSequence target = tokenize(*doc.summary, model.vocab());
    examples.push_back(make_example(model, source.ids, target.ids));
  }
  return train_examples(model, examples, schedule, seed);
}

TokenSequence generate(const Seq2SeqModel& model, const TokenSequence& source,
                       int max_len) {
  const int limit = std::min(max_len, model.config().max_target_len);
  std::vector<int> src = model.prepare_source(source.ids);
  const auto& net = model.network();
  nn::Matrix<float> memory = net.encode(src, nullptr);
  std::vector<int> decoder_input = {Vocabulary::kBos};
  std::vector<int> output;
  while (static_cast<int>(output.size()) < limit) {
    nn::Matrix<float> logits = net.decode(memory, decoder_input, nullptr);
    int next = nn::argmax_row(logits, logits.rows() - 1);
    if (next == Vocabulary::kEos) break;
    output.push_back(next);
    decoder_input.push_back(next);
  }
  return model.vocab().from_ids(output);
}

}  // namespace mnelm
