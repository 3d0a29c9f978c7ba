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

#include "mnelm/schedule.h"

#include <cmath>

#include "mnelm/errors.h"

namespace mnelm {

TrainingSchedule TrainingSchedule::pretraining() {
  TrainingSchedule s;
  s.initial_lr = 5e-5;
  s.gamma = 0.5;
  s.decay_interval_steps = 10000;
  return s;
}

TrainingSchedule TrainingSchedule::finetuning() {
  TrainingSchedule s;
  s.initial_lr = 2e-5;
  s.gamma = 0.5;
  s.decay_interval_steps = 5000;
  return s;
}

void TrainingSchedule::validate() const {
  if (!(initial_lr > 0)) throw ConfigError("initial_lr must be positive");
  if (!(gamma > 0 && gamma <= 1)) throw ConfigError("gamma must be in (0, 1]");
  if (decay_interval_steps <= 0) {
    throw ConfigError("decay_interval_steps must be positive");
  }
  if (epochs <= 0 && max_steps <= 0) {
    throw ConfigError("either epochs or max_steps must be positive");
  }
  if (max_steps < 0) throw ConfigError("max_steps must be nonnegative");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
}

double lr_at(const TrainingSchedule& schedule, std::int64_t step) {
  if (step < 0) step = 0;
  const std::int64_t period = step / schedule.decay_interval_steps;
  const double anchor =
      schedule.initial_lr * std::pow(schedule.gamma, static_cast<double>(period));
  if (schedule.decay == DecayKind::kStep) return anchor;
  const double frac =
      static_cast<double>(step % schedule.decay_interval_steps) /
      static_cast<double>(schedule.decay_interval_steps);
  return anchor * (1.0 - (1.0 - schedule.gamma) * frac);
}

std::int64_t total_steps(const TrainingSchedule& schedule,
                         std::size_t num_examples) {
  if (schedule.max_steps > 0) return schedule.max_steps;
  const auto n = static_cast<std::int64_t>(num_examples);
  const std::int64_t per_epoch =
      (n + schedule.batch_size - 1) / schedule.batch_size;
  return per_epoch * schedule.epochs;
}

nlohmann::json to_json(const TrainingSchedule& s) {
  return {{"initial_lr", s.initial_lr},
          {"gamma", s.gamma},
          {"decay_interval_steps", s.decay_interval_steps},
          {"decay", s.decay == DecayKind::kStep ? "step" : "linear"},
          {"epochs", s.epochs},
          {"max_steps", s.max_steps},
          {"batch_size", s.batch_size}};
}

TrainingSchedule schedule_from_json(const nlohmann::json& j,
                                    const TrainingSchedule& defaults) {
  if (!j.is_object()) throw ConfigError("schedule must be an object");
  TrainingSchedule s = defaults;
  try {
    for (const auto& [key, value] : j.items()) {
      if (key == "initial_lr") s.initial_lr = value.get<double>();
      else if (key == "gamma") s.gamma = value.get<double>();
      else if (key == "decay_interval_steps") s.decay_interval_steps = value.get<std::int64_t>();
      else if (key == "epochs") s.epochs = value.get<std::int64_t>();
      else if (key == "max_steps") s.max_steps = value.get<std::int64_t>();
      else if (key == "batch_size") s.batch_size = value.get<std::int64_t>();
      else if (key == "decay") {
        std::string kind = value.get<std::string>();
        if (kind == "step") s.decay = DecayKind::kStep;
        else if (kind == "linear") s.decay = DecayKind::kLinear;
        else throw ConfigError("decay must be 'step' or 'linear'");
      } else {
        throw ConfigError("unknown schedule key '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad schedule value: ") + e.what());
  }
  s.validate();
  return s;
}

}  // namespace mnelm
