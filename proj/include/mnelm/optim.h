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

#ifndef MNELM_OPTIM_H_
#define MNELM_OPTIM_H_

#include <cmath>
#include <vector>

#include "mnelm/nn.h"

namespace mnelm::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Global gradient-norm clip; <= 0 disables clipping.
  double clip_norm = 1.0;
};

// Adam (Kingma & Ba) with bias correction and no weight decay. step()
// consumes the accumulated gradients and zeroes them.
template <typename T>
class Adam {
 public:
  Adam(std::vector<Parameter<T>*> params, AdamOptions options)
      : params_(std::move(params)), options_(options) {
    for (Parameter<T>* p : params_) {
      first_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      second_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }

  void zero_grad() {
    for (Parameter<T>* p : params_) p->grad.setZero();
  }

  double grad_norm() const {
    double total = 0;
    for (const Parameter<T>* p : params_) {
      total += static_cast<double>(p->grad.squaredNorm());
    }
    return std::sqrt(total);
  }

  void step(double lr) {
    ++steps_;
    double scale = 1.0;
    if (options_.clip_norm > 0) {
      double norm = grad_norm();
      if (norm > options_.clip_norm) scale = options_.clip_norm / norm;
    }
    const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
    const T b1 = static_cast<T>(options_.beta1);
    const T b2 = static_cast<T>(options_.beta2);
    const T step_size = static_cast<T>(lr / c1);
    const T inv_c2 = static_cast<T>(1.0 / c2);
    const T eps = static_cast<T>(options_.epsilon);
    for (std::size_t i = 0; i < params_.size(); ++i) {
      Parameter<T>& p = *params_[i];
      auto g = p.grad.array() * static_cast<T>(scale);
      first_[i].array() = b1 * first_[i].array() + (T(1) - b1) * g;
      second_[i].array() = b2 * second_[i].array() + (T(1) - b2) * g.square();
      p.value.array() -= step_size * first_[i].array() /
                         ((second_[i].array() * inv_c2).sqrt() + eps);
      p.grad.setZero();
    }
  }

  long long steps() const { return steps_; }

 private:
  std::vector<Parameter<T>*> params_;
  AdamOptions options_;
  std::vector<Matrix<T>> first_;
  std::vector<Matrix<T>> second_;
  long long steps_ = 0;
};

}  // namespace mnelm::nn

#endif  // MNELM_OPTIM_H_
