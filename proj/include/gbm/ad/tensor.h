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

#ifndef GBM_AD_TENSOR_H_
#define GBM_AD_TENSOR_H_

#include <cstddef>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace gbm::ad {

using Shape = std::vector<std::size_t>;

inline std::size_t NumElements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string ShapeToString(const Shape& shape);

// Dense row-major float64 array.
struct Tensor {
  Shape shape;
  std::vector<double> data;

  Tensor() = default;
  explicit Tensor(Shape s) : shape(std::move(s)), data(NumElements(shape)) {}
  Tensor(Shape s, std::vector<double> values);

  static Tensor Zeros(Shape s) { return Tensor(std::move(s)); }
  static Tensor Scalar(double v) { return Tensor(Shape{}, {v}); }

  std::size_t size() const { return data.size(); }
  std::size_t rank() const { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape[i]; }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }
  double item() const { return data.at(0); }

  bool AllFinite() const;

  bool operator==(const Tensor&) const = default;
};

}  // namespace gbm::ad

#endif  // GBM_AD_TENSOR_H_
