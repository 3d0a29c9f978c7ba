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

// The two concrete networks: an encoder-decoder for denoising and
// summarization, and an encoder with a per-token classifier for tagging.

#ifndef MNELM_NETWORKS_H_
#define MNELM_NETWORKS_H_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mnelm/nn.h"
#include "mnelm/rng.h"

namespace mnelm::nn {

struct EncoderDecoderShape {
  int vocab_size = 0;
  int hidden = 128;
  int heads = 4;
  int encoder_layers = 2;
  int decoder_layers = 2;
  int ff_hidden = 512;
  int max_source_len = 512;
  // Content tokens; the decoder sees one extra position for BOS/EOS.
  int max_target_len = 64;
};

template <typename T>
class EncoderDecoder {
 public:
  struct EncodeCache {
    std::vector<typename EncoderLayer<T>::Cache> layers;
    typename LayerNorm<T>::Cache final_norm;
  };
  struct DecodeCache {
    std::vector<typename DecoderLayer<T>::Cache> layers;
    typename LayerNorm<T>::Cache final_norm;
    typename Linear<T>::Cache projection;
  };

  EncoderDecoder() = default;

  EncoderDecoder(const EncoderDecoderShape& shape, std::uint64_t seed)
      : shape_(shape) {
    Rng rng = Rng::derive(seed, 0x5e125e12);
    const double residual_gain =
        1.0 / std::sqrt(2.0 * (shape.encoder_layers + shape.decoder_layers));
    embedding_ = Embedding<T>("embedding", shape.vocab_size, shape.hidden, rng, 1.0);
    source_positions_ = Embedding<T>("encoder.positions", shape.max_source_len,
                                     shape.hidden, rng, 1.0);
    target_positions_ = Embedding<T>("decoder.positions",
                                     shape.max_target_len + 1, shape.hidden, rng, 1.0);
    for (int i = 0; i < shape.encoder_layers; ++i) {
      encoder_.emplace_back("encoder.layer" + std::to_string(i), shape.hidden,
                            shape.heads, shape.ff_hidden, rng, residual_gain);
    }
    encoder_norm_ = LayerNorm<T>("encoder.norm", shape.hidden);
    for (int i = 0; i < shape.decoder_layers; ++i) {
      decoder_.emplace_back("decoder.layer" + std::to_string(i), shape.hidden,
                            shape.heads, shape.ff_hidden, rng, residual_gain);
    }
    decoder_norm_ = LayerNorm<T>("decoder.norm", shape.hidden);
    projection_ = Linear<T>("projection", shape.hidden, shape.vocab_size, rng);
  }

  const EncoderDecoderShape& shape() const { return shape_; }

  // `source` must be non-empty and no longer than max_source_len.
  Matrix<T> encode(std::span<const int> source, EncodeCache* cache) const {
    Matrix<T> x = embedding_.forward(source) +
                  source_positions_.leading(static_cast<Eigen::Index>(source.size()));
    if (cache) cache->layers.resize(encoder_.size());
    for (std::size_t i = 0; i < encoder_.size(); ++i) {
      x = encoder_[i].forward(x, cache ? &cache->layers[i] : nullptr);
    }
    return encoder_norm_.forward(x, cache ? &cache->final_norm : nullptr);
  }

  // Logits for every decoder input position. `decoder_input` holds at most
  // max_target_len + 1 ids.
  Matrix<T> decode(const Matrix<T>& memory, std::span<const int> decoder_input,
                   DecodeCache* cache) const {
    Matrix<T> y = embedding_.forward(decoder_input) +
                  target_positions_.leading(
                      static_cast<Eigen::Index>(decoder_input.size()));
    if (cache) cache->layers.resize(decoder_.size());
    for (std::size_t i = 0; i < decoder_.size(); ++i) {
      y = decoder_[i].forward(y, memory, cache ? &cache->layers[i] : nullptr);
    }
    y = decoder_norm_.forward(y, cache ? &cache->final_norm : nullptr);
    return projection_.forward(y, cache ? &cache->projection : nullptr);
  }

  // Forward-only teacher-forced loss.
  T evaluate(std::span<const int> source, std::span<const int> decoder_input,
             std::span<const int> targets) const {
    Matrix<T> memory = encode(source, nullptr);
    return cross_entropy(decode(memory, decoder_input, nullptr), targets,
                         static_cast<Matrix<T>*>(nullptr));
  }

  // Teacher-forced mean cross-entropy. With backprop, the gradient of
  // grad_scale * loss is accumulated into the parameters.
  T loss(std::span<const int> source, std::span<const int> decoder_input,
         std::span<const int> targets, bool backprop, T grad_scale = T(1)) {
    EncodeCache enc_cache;
    DecodeCache dec_cache;
    Matrix<T> memory = encode(source, backprop ? &enc_cache : nullptr);
    Matrix<T> logits = decode(memory, decoder_input, backprop ? &dec_cache : nullptr);
    Matrix<T> dlogits;
    T value = cross_entropy(logits, targets, backprop ? &dlogits : nullptr);
    if (!backprop) return value;
    dlogits *= grad_scale;

    Matrix<T> dy = projection_.backward(dec_cache.projection, dlogits);
    dy = decoder_norm_.backward(dec_cache.final_norm, dy);
    Matrix<T> dmemory = Matrix<T>::Zero(memory.rows(), memory.cols());
    for (std::size_t i = decoder_.size(); i-- > 0;) {
      dy = decoder_[i].backward(dec_cache.layers[i], dy, dmemory);
    }
    embedding_.backward(decoder_input, dy);
    target_positions_.backward_leading(dy);

    Matrix<T> dx = encoder_norm_.backward(enc_cache.final_norm, dmemory);
    for (std::size_t i = encoder_.size(); i-- > 0;) {
      dx = encoder_[i].backward(enc_cache.layers[i], dx);
    }
    embedding_.backward(source, dx);
    source_positions_.backward_leading(dx);
    return value;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    embedding_.for_each_parameter(f);
    source_positions_.for_each_parameter(f);
    target_positions_.for_each_parameter(f);
    for (auto& layer : encoder_) layer.for_each_parameter(f);
    encoder_norm_.for_each_parameter(f);
    for (auto& layer : decoder_) layer.for_each_parameter(f);
    decoder_norm_.for_each_parameter(f);
    projection_.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    embedding_.for_each_parameter(f);
    source_positions_.for_each_parameter(f);
    target_positions_.for_each_parameter(f);
    for (const auto& layer : encoder_) layer.for_each_parameter(f);
    encoder_norm_.for_each_parameter(f);
    for (const auto& layer : decoder_) layer.for_each_parameter(f);
    decoder_norm_.for_each_parameter(f);
    projection_.for_each_parameter(f);
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for_each_parameter([&](Parameter<T>& p) { out.push_back(&p); });
    return out;
  }

  Linear<T>& projection() { return projection_; }

 private:
  EncoderDecoderShape shape_;
  Embedding<T> embedding_;
  Embedding<T> source_positions_;
  Embedding<T> target_positions_;
  std::vector<EncoderLayer<T>> encoder_;
  LayerNorm<T> encoder_norm_;
  std::vector<DecoderLayer<T>> decoder_;
  LayerNorm<T> decoder_norm_;
  Linear<T> projection_;
};

struct TaggerShape {
  int vocab_size = 0;
  int num_tags = 13;
  int hidden = 128;
  int heads = 4;
  int layers = 2;
  int ff_hidden = 512;
  int max_len = 128;
};

template <typename T>
class TokenTagger {
 public:
  struct Cache {
    std::vector<typename EncoderLayer<T>::Cache> layers;
    typename LayerNorm<T>::Cache final_norm;
    typename Linear<T>::Cache classifier;
  };

  TokenTagger() = default;

  TokenTagger(const TaggerShape& shape, std::uint64_t seed) : shape_(shape) {
    Rng rng = Rng::derive(seed, 0x7a66e7);
    const double residual_gain = 1.0 / std::sqrt(2.0 * shape.layers);
    embedding_ = Embedding<T>("embedding", shape.vocab_size, shape.hidden, rng, 1.0);
    positions_ = Embedding<T>("positions", shape.max_len, shape.hidden, rng, 1.0);
    for (int i = 0; i < shape.layers; ++i) {
      layers_.emplace_back("encoder.layer" + std::to_string(i), shape.hidden,
                           shape.heads, shape.ff_hidden, rng, residual_gain);
    }
    norm_ = LayerNorm<T>("encoder.norm", shape.hidden);
    classifier_ = Linear<T>("classifier", shape.hidden, shape.num_tags, rng);
  }

  const TaggerShape& shape() const { return shape_; }

  // `ids` must be non-empty and no longer than max_len.
  Matrix<T> logits(std::span<const int> ids, Cache* cache) const {
    Matrix<T> x = embedding_.forward(ids) +
                  positions_.leading(static_cast<Eigen::Index>(ids.size()));
    if (cache) cache->layers.resize(layers_.size());
    for (std::size_t i = 0; i < layers_.size(); ++i) {
      x = layers_[i].forward(x, cache ? &cache->layers[i] : nullptr);
    }
    x = norm_.forward(x, cache ? &cache->final_norm : nullptr);
    return classifier_.forward(x, cache ? &cache->classifier : nullptr);
  }

  T loss(std::span<const int> ids, std::span<const int> tags, bool backprop) {
    Cache cache;
    Matrix<T> out = logits(ids, backprop ? &cache : nullptr);
    Matrix<T> dlogits;
    T value = cross_entropy(out, tags, backprop ? &dlogits : nullptr);
    if (!backprop) return value;
    Matrix<T> dx = classifier_.backward(cache.classifier, dlogits);
    dx = norm_.backward(cache.final_norm, dx);
    for (std::size_t i = layers_.size(); i-- > 0;) {
      dx = layers_[i].backward(cache.layers[i], dx);
    }
    embedding_.backward(ids, dx);
    positions_.backward_leading(dx);
    return value;
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    embedding_.for_each_parameter(f);
    positions_.for_each_parameter(f);
    for (auto& layer : layers_) layer.for_each_parameter(f);
    norm_.for_each_parameter(f);
    classifier_.for_each_parameter(f);
  }
  template <typename F>
  void for_each_parameter(F&& f) const {
    embedding_.for_each_parameter(f);
    positions_.for_each_parameter(f);
    for (const auto& layer : layers_) layer.for_each_parameter(f);
    norm_.for_each_parameter(f);
    classifier_.for_each_parameter(f);
  }

  std::vector<Parameter<T>*> parameters() {
    std::vector<Parameter<T>*> out;
    for_each_parameter([&](Parameter<T>& p) { out.push_back(&p); });
    return out;
  }

  Linear<T>& classifier() { return classifier_; }

 private:
  TaggerShape shape_;
  Embedding<T> embedding_;
  Embedding<T> positions_;
  std::vector<EncoderLayer<T>> layers_;
  LayerNorm<T> norm_;
  Linear<T> classifier_;
};

}  // namespace mnelm::nn

#endif  // MNELM_NETWORKS_H_
