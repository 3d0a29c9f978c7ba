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

// Versioned single-file model archive.
//
// Layout (all integers little-endian):
//   magic      8 bytes  "MNELMCKP"
//   version    u32
//   kind       u32      1 = tagger, 2 = encoder-decoder
//   metadata   str      JSON (config, seed, training state)
//   vocabulary u32 count, then str per token
//   labels     u32 count, then str per label
//   tensors    u32 count, then per tensor:
//                str name, u32 rank, u64 dim * rank,
//                f32 * product(dims)  (IEEE-754 binary32)
// where str = u64 byte length followed by UTF-8 bytes.

#ifndef MNELM_CHECKPOINT_H_
#define MNELM_CHECKPOINT_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "mnelm/errors.h"
#include "mnelm/nn.h"

namespace mnelm {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointTensor {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> data;

  bool operator==(const CheckpointTensor&) const = default;
};

struct Checkpoint {
  enum class Kind : std::uint32_t { kTagger = 1, kEncoderDecoder = 2 };

  Kind kind = Kind::kTagger;
  nlohmann::json metadata;
  std::vector<std::string> vocabulary;
  std::vector<std::string> labels;
  std::vector<CheckpointTensor> tensors;
};

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);

// Throws MissingCheckpoint when the file is absent, FormatError when it is
// truncated or carries the wrong magic or version.
Checkpoint read_checkpoint(const std::filesystem::path& path);

template <typename Net>
std::vector<CheckpointTensor> export_tensors(const Net& net) {
  std::vector<CheckpointTensor> out;
  net.for_each_parameter([&](const nn::Parameter<float>& p) {
    CheckpointTensor t;
    t.name = p.name;
    t.shape = {static_cast<std::uint64_t>(p.value.rows()),
               static_cast<std::uint64_t>(p.value.cols())};
    t.data.assign(p.value.data(), p.value.data() + p.value.size());
    out.push_back(std::move(t));
  });
  return out;
}

// Names, order and shapes must match the freshly constructed `net`.
template <typename Net>
void import_tensors(Net& net, const std::vector<CheckpointTensor>& tensors) {
  std::size_t i = 0;
  net.for_each_parameter([&](nn::Parameter<float>& p) {
    if (i >= tensors.size()) throw FormatError(0, "checkpoint has too few tensors");
    const CheckpointTensor& t = tensors[i++];
    if (t.name != p.name || t.shape.size() != 2 ||
        t.shape[0] != static_cast<std::uint64_t>(p.value.rows()) ||
        t.shape[1] != static_cast<std::uint64_t>(p.value.cols())) {
      throw FormatError(0, "checkpoint tensor '" + t.name +
                               "' does not match parameter '" + p.name + "'");
    }
    std::copy(t.data.begin(), t.data.end(), p.value.data());
    p.grad.setZero();
  });
  if (i != tensors.size()) throw FormatError(0, "checkpoint has extra tensors");
}

}  // namespace mnelm

#endif  // MNELM_CHECKPOINT_H_
