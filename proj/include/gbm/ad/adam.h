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

#ifndef GBM_AD_ADAM_H_
#define GBM_AD_ADAM_H_

#include <cstdint>
#include <vector>

#include "gbm/ad/tape.h"

namespace gbm::ad {

struct AdamOptions {
  double lr = 6.6e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Adam with bias correction. Moment buffers are laid out in the parameter
// store's iteration order.
class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  // Applies one update from each parameter's `grad`. Throws
  // Error(kNonFiniteGradient) before touching any parameter if a gradient
  // contains NaN or Inf.
  void Step(ParameterStore& params);

  std::int64_t step() const { return step_; }
  const AdamOptions& options() const { return options_; }

 private:
  AdamOptions options_;
  std::int64_t step_ = 0;
  std::vector<Tensor> first_moment_;
  std::vector<Tensor> second_moment_;
};

}  // namespace gbm::ad

#endif  // GBM_AD_ADAM_H_
