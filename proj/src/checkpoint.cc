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

#include "mnelm/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace mnelm {
namespace {

constexpr char kMagic[8] = {'M', 'N', 'E', 'L', 'M', 'C', 'K', 'P'};

class Writer {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  void str(const std::string& s) {
    u64(s.size());
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  const std::vector<char>& bytes() const { return bytes_; }

 private:
  std::vector<char> bytes_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> bytes) : bytes_(std::move(bytes)) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    }
    return v;
  }
  std::string str() {
    std::uint64_t n = u64();
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  void expect_magic() {
    need(sizeof(kMagic));
    if (std::memcmp(bytes_.data(), kMagic, sizeof(kMagic)) != 0) {
      throw FormatError(0, "not a checkpoint file");
    }
    pos_ += sizeof(kMagic);
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::uint64_t n) const {
    if (n > bytes_.size() - pos_) throw FormatError(0, "checkpoint is truncated");
  }

  std::vector<char> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof(kMagic));
  w.u32(kCheckpointVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.kind));
  w.str(ckpt.metadata.dump());
  w.u32(static_cast<std::uint32_t>(ckpt.vocabulary.size()));
  for (const auto& t : ckpt.vocabulary) w.str(t);
  w.u32(static_cast<std::uint32_t>(ckpt.labels.size()));
  for (const auto& l : ckpt.labels) w.str(l);
  w.u32(static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const CheckpointTensor& t : ckpt.tensors) {
    w.str(t.name);
    w.u32(static_cast<std::uint32_t>(t.shape.size()));
    for (std::uint64_t d : t.shape) w.u64(d);
    for (float v : t.data) w.f32(v);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Error::Category::kOther, "cannot write " + path.string());
  out.write(w.bytes().data(), static_cast<std::streamsize>(w.bytes().size()));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingCheckpoint(path.string());
  Reader r(std::vector<char>((std::istreambuf_iterator<char>(in)),
                             std::istreambuf_iterator<char>()));
  r.expect_magic();
  std::uint32_t version = r.u32();
  if (version != kCheckpointVersion) {
    throw FormatError(0, "unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  std::uint32_t kind = r.u32();
  if (kind != 1 && kind != 2) throw FormatError(0, "unknown checkpoint kind");
  ckpt.kind = static_cast<Checkpoint::Kind>(kind);
  try {
    ckpt.metadata = nlohmann::json::parse(r.str());
  } catch (const nlohmann::json::parse_error&) {
    throw FormatError(0, "checkpoint metadata is not valid json");
  }
  std::uint32_t n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) ckpt.vocabulary.push_back(r.str());
  n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) ckpt.labels.push_back(r.str());
  n = r.u32();
  for (std::uint32_t i = 0; i < n; ++i) {
    CheckpointTensor t;
    t.name = r.str();
    std::uint32_t rank = r.u32();
    std::uint64_t count = 1;
    for (std::uint32_t k = 0; k < rank; ++k) {
      t.shape.push_back(r.u64());
      count *= t.shape.back();
      if (count > r.remaining() / sizeof(float)) {
        throw FormatError(0, "checkpoint is truncated");
      }
    }
    t.data.reserve(count);
    for (std::uint64_t k = 0; k < count; ++k) t.data.push_back(r.f32());
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) throw FormatError(0, "trailing bytes after checkpoint");
  return ckpt;
}

}  // namespace mnelm
