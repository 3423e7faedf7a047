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

#include "gbm/ad/grad_check.h"

#include <algorithm>
#include <cmath>

namespace gbm::ad {
namespace {

void Consider(GradCheckResult& result, double analytic, double numeric,
              const std::string& where) {
  ++result.checked;
  const double err = RelativeError(analytic, numeric);
  if (result.checked == 1 || err > result.max_rel_error) {
    result.max_rel_error = err;
    result.worst_location = where;
    result.worst_analytic = analytic;
    result.worst_numeric = numeric;
  }
}

}  // namespace

double RelativeError(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1e-6, std::abs(analytic) + std::abs(numeric));
}

GradCheckResult GradCheck(const ScalarFn& f, const std::vector<Tensor>& inputs,
                          double eps) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : inputs) vars.push_back(tape.Leaf(t));
    Var out = f(tape, vars);
    tape.Backward(out);
    for (const Var& v : vars) analytic.push_back(tape.Grad(v));
  }
  auto evaluate = [&](const std::vector<Tensor>& xs) {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& t : xs) vars.push_back(tape.Constant(t));
    return f(tape, vars).value().item();
  };
  GradCheckResult result;
  std::vector<Tensor> probe = inputs;
  for (std::size_t k = 0; k < probe.size(); ++k) {
    for (std::size_t i = 0; i < probe[k].size(); ++i) {
      const double original = probe[k][i];
      probe[k][i] = original + eps;
      const double plus = evaluate(probe);
      probe[k][i] = original - eps;
      const double minus = evaluate(probe);
      probe[k][i] = original;
      Consider(result, analytic[k][i], (plus - minus) / (2 * eps),
               "input " + std::to_string(k) + "[" + std::to_string(i) + "]");
    }
  }
  return result;
}

GradCheckResult GradCheckParameters(const std::function<Var(Tape&)>& f,
                                    ParameterStore& params, double eps,
                                    std::optional<std::size_t> max_per_param) {
  params.ZeroGrad();
  {
    Tape tape;
    tape.Backward(f(tape));
  }
  std::vector<Tensor> analytic;
  for (const Parameter& p : params) analytic.push_back(p.grad);
  auto evaluate = [&] {
    Tape tape;
    return f(tape).value().item();
  };
  GradCheckResult result;
  std::size_t k = 0;
  for (Parameter& p : params) {
    const std::size_t n = p.value.size();
    const std::size_t probes = max_per_param ? std::min(n, *max_per_param) : n;
    for (std::size_t s = 0; s < probes; ++s) {
      const std::size_t i = probes == n ? s : (s * n) / probes;
      const double original = p.value[i];
      p.value[i] = original + eps;
      const double plus = evaluate();
      p.value[i] = original - eps;
      const double minus = evaluate();
      p.value[i] = original;
      Consider(result, analytic[k][i], (plus - minus) / (2 * eps),
               p.name + "[" + std::to_string(i) + "]");
    }
    ++k;
  }
  params.ZeroGrad();
  return result;
}

}  // namespace gbm::ad
