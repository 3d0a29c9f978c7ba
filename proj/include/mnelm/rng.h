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

#ifndef MNELM_RNG_H_
#define MNELM_RNG_H_

#include <cstdint>
#include <span>
#include <utility>

namespace mnelm {

// SplitMix64 (Steele, Lea & Flood 2014). Every output is a fixed function of
// the 64-bit state, so streams are identical on every platform. Derived
// streams come from hashing (seed, index), which lets each document or stage
// own an independent generator regardless of scheduling order.
//
// Conversions to floating point and bounded integers are defined here rather
// than through <random> distributions, whose output is implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    return mix(z);
  }

  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // True with probability p. p <= 0 never fires, p >= 1 always fires.
  bool bernoulli(double p) { return uniform() < p; }

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal();

  // Uniform integer in [0, n), n > 0. Rejection sampling removes modulo bias.
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // Independent stream for (seed, index).
  static Rng derive(std::uint64_t seed, std::uint64_t index) {
    return Rng(mix(seed ^ mix(index + 0x632BE59BD9B4E019ULL)));
  }

  std::uint64_t state() const { return state_; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace mnelm

#endif  // MNELM_RNG_H_
