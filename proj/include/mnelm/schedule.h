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

#ifndef MNELM_SCHEDULE_H_
#define MNELM_SCHEDULE_H_

#include <cstddef>
#include <cstdint>
#include <string>

#include "json.hpp"

namespace mnelm {

enum class DecayKind {
  // lr = initial_lr * gamma^floor(step / decay_interval_steps)
  kStep,
  // Piecewise-linear interpolation between the step-decay anchors, so the
  // rate equals the step-decay value at every multiple of the interval.
  kLinear,
};

struct TrainingSchedule {
  double initial_lr = 5e-5;
  double gamma = 0.5;
  std::int64_t decay_interval_steps = 10000;
  DecayKind decay = DecayKind::kStep;
  // Passes over the data; ignored when max_steps > 0.
  std::int64_t epochs = 1;
  std::int64_t max_steps = 0;
  std::int64_t batch_size = 1;

  // 5e-5, halved every 10k steps, one epoch, batch 1.
  static TrainingSchedule pretraining();
  // 2e-5, halved every 5k steps, one epoch, batch 1.
  static TrainingSchedule finetuning();

  // Throws ConfigError.
  void validate() const;

  bool operator==(const TrainingSchedule&) const = default;
};

double lr_at(const TrainingSchedule& schedule, std::int64_t step);

// Optimizer steps needed for `num_examples` examples.
std::int64_t total_steps(const TrainingSchedule& schedule,
                         std::size_t num_examples);

nlohmann::json to_json(const TrainingSchedule& schedule);
// Missing keys keep the values of `defaults`; unknown keys are rejected.
TrainingSchedule schedule_from_json(const nlohmann::json& j,
                                    const TrainingSchedule& defaults);

}  // namespace mnelm

#endif  // MNELM_SCHEDULE_H_
