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

#ifndef GBM_AD_GRAD_CHECK_H_
#define GBM_AD_GRAD_CHECK_H_

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gbm/ad/tape.h"

namespace gbm::ad {

// |a - n| / max(1e-6, |a| + |n|). The floor keeps gradients that are
// exactly zero, whose central difference is pure rounding noise, from
// registering as failures.
double RelativeError(double analytic, double numeric);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_location;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t checked = 0;
};

using ScalarFn = std::function<Var(Tape&, const std::vector<Var>&)>;

// Compares tape gradients of a scalar function with central differences
// (f(x + eps) - f(x - eps)) / (2 eps), element by element over all inputs.
GradCheckResult GradCheck(const ScalarFn& f, const std::vector<Tensor>& inputs,
                          double eps = 1e-5);

// Same comparison for a function of a parameter store; `f` binds whatever
// parameters it uses on the tape it is given. When `max_per_param` is set,
// only that many evenly spaced elements of each parameter are probed.
GradCheckResult GradCheckParameters(const std::function<Var(Tape&)>& f,
                                    ParameterStore& params, double eps = 1e-5,
                                    std::optional<std::size_t> max_per_param =
                                        std::nullopt);

}  // namespace gbm::ad

#endif  // GBM_AD_GRAD_CHECK_H_
