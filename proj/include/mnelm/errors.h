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

#ifndef MNELM_ERRORS_H_
#define MNELM_ERRORS_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mnelm {

// Base class for every error raised by the library. The CLI maps the
// category to a process exit code.
class Error : public std::runtime_error {
 public:
  enum class Category { kConfig, kMissingArtifact, kData, kOther };

  Error(Category category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  Category category() const { return category_; }

 private:
  Category category_;
};

// Malformed input record. line() is 1-based, 0 when not tied to a line.
class FormatError : public Error {
 public:
  FormatError(std::size_t line, const std::string& what)
      : Error(Category::kData, line == 0 ? what
                                         : "line " + std::to_string(line) +
                                               ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class MissingSummary : public Error {
 public:
  explicit MissingSummary(const std::string& doc_id)
      : Error(Category::kData, "document '" + doc_id + "' has no summary"),
        doc_id_(doc_id) {}

  const std::string& doc_id() const { return doc_id_; }

 private:
  std::string doc_id_;
};

class LabelError : public Error {
 public:
  explicit LabelError(const std::string& label)
      : Error(Category::kData, "unknown entity label '" + label + "'"),
        label_(label) {}

  const std::string& label() const { return label_; }

 private:
  std::string label_;
};

class SpanError : public Error {
 public:
  explicit SpanError(const std::string& what) : Error(Category::kData, what) {}
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error(Category::kData, "corpus contains no documents") {}
};

class EmptyDataset : public Error {
 public:
  explicit EmptyDataset(const std::string& what)
      : Error(Category::kData, what) {}
};

class LengthMismatch : public Error {
 public:
  LengthMismatch(std::size_t left, std::size_t right)
      : Error(Category::kData, "length mismatch: " + std::to_string(left) +
                                   " vs " + std::to_string(right)) {}
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what)
      : Error(Category::kConfig, what) {}
};

class MissingArtifact : public Error {
 public:
  explicit MissingArtifact(const std::string& what)
      : Error(Category::kMissingArtifact, "missing file: " + what) {}
};

class MissingCheckpoint : public Error {
 public:
  explicit MissingCheckpoint(const std::string& what)
      : Error(Category::kMissingArtifact, "missing checkpoint: " + what) {}
};

}  // namespace mnelm

#endif  // MNELM_ERRORS_H_
