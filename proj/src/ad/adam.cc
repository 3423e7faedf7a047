// Copyright 2026 The gbm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "gbm/ad/adam.h"

#include <cmath>

#include "gbm/status.h"

namespace gbm::ad {

void Adam::Step(ParameterStore& params) {
  for (const Parameter& p : params) {
    if (p.grad.shape != p.value.shape) {
      throw Error(ErrorCode::kShapeMismatch, "gradient of " + p.name);
    }
    if (!p.grad.AllFinite()) {
      throw Error(ErrorCode::kNonFiniteGradient, "gradient of " + p.name);
    }
  }
  if (first_moment_.empty()) {
    for (const Parameter& p : params) {
      first_moment_.push_back(Tensor::Zeros(p.value.shape));
      second_moment_.push_back(Tensor::Zeros(p.value.shape));
    }
  }
  if (first_moment_.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "parameter set changed under Adam");
  }
  ++step_;
  const double t = static_cast<double>(step_);
  const double correction1 = 1.0 - std::pow(options_.beta1, t);
  const double correction2 = 1.0 - std::pow(options_.beta2, t);
  std::size_t k = 0;
  for (Parameter& p : params) {
    Tensor& m = first_moment_[k];
    Tensor& v = second_moment_[k];
    ++k;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i];
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * g;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * g * g;
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      p.value[i] -= options_.lr * m_hat / (std::sqrt(v_hat) + options_.eps);
    }
  }
}

}  // namespace gbm::ad
