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

// Reads a flat JSON config object into typed fields, rejecting unknown keys.

#ifndef MNELM_SRC_JSON_FIELDS_H_
#define MNELM_SRC_JSON_FIELDS_H_

#include <set>
#include <string>

#include "json.hpp"
#include "mnelm/errors.h"

namespace mnelm::internal {

class FieldReader {
 public:
  FieldReader(const nlohmann::json& object, std::string section)
      : object_(object), section_(std::move(section)) {
    if (!object_.is_object()) throw ConfigError(section_ + " must be an object");
  }

  template <typename T>
  FieldReader& read(const std::string& key, T& out) {
    known_.insert(key);
    auto it = object_.find(key);
    if (it == object_.end()) return *this;
    try {
      out = it->get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(section_ + "." + key + " has the wrong type");
    }
    return *this;
  }

  void finish() const {
    for (const auto& [key, value] : object_.items()) {
      if (!known_.count(key)) {
        throw ConfigError("unknown key '" + section_ + "." + key + "'");
      }
    }
  }

 private:
  const nlohmann::json& object_;
  std::string section_;
  std::set<std::string> known_;
};

}  // namespace mnelm::internal

#endif  // MNELM_SRC_JSON_FIELDS_H_
