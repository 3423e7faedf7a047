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

#ifndef GBM_AD_TAPE_H_
#define GBM_AD_TAPE_H_

#include <cstddef>
#include <deque>
#include <functional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gbm/ad/tensor.h"

namespace gbm::ad {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Tensor& value() const;
  const Shape& shape() const { return value().shape; }
  std::size_t size() const { return value().size(); }
  bool requires_grad() const;
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// A trainable tensor with its accumulated gradient.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
};

// Named, ordered collection of parameters. Element addresses are stable.
class ParameterStore {
 public:
  Parameter& Add(std::string name, Tensor value);
  Parameter& Get(std::string_view name);
  const Parameter& Get(std::string_view name) const;
  bool Contains(std::string_view name) const;

  void ZeroGrad();
  std::size_t size() const { return params_.size(); }
  std::size_t NumScalars() const;

  std::deque<Parameter>::iterator begin() { return params_.begin(); }
  std::deque<Parameter>::iterator end() { return params_.end(); }
  std::deque<Parameter>::const_iterator begin() const {
    return params_.begin();
  }
  std::deque<Parameter>::const_iterator end() const { return params_.end(); }

 private:
  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Records operations in execution order and replays their backward closures
// in reverse. Each closure accumulates (+=) into its inputs' gradients.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf that never receives a gradient.
  Var Constant(Tensor value);
  // Leaf whose gradient is kept on the tape (see Grad()).
  Var Leaf(Tensor value);
  // Leaf that reads the parameter in place and accumulates into its grad.
  Var Bind(Parameter& param);

  // Used by op implementations. `inputs` decides requires_grad; the closure
  // is dropped when no input needs a gradient.
  Var Record(Tensor value, std::initializer_list<Var> inputs,
             BackwardFn backward, std::string_view op_name);
  Var Record(Tensor value, const std::vector<Var>& inputs,
             BackwardFn backward, std::string_view op_name);

  // Seeds d(loss)/d(loss) = 1 and propagates to every recorded node.
  void Backward(Var loss);

  const Tensor& value(std::size_t id) const;
  const Tensor& value(Var v) const { return value(v.id()); }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer for node `id`, allocated as zeros on first access.
  Tensor& GradBuffer(std::size_t id);
  // Gradient of a leaf after Backward(); zeros if none flowed.
  const Tensor& Grad(Var v);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    Tensor* external_grad = nullptr;
    bool requires_grad = false;
    bool grad_touched = false;
    BackwardFn backward;
  };

  Var Push(Node node);

  std::deque<Node> nodes_;
};

}  // namespace gbm::ad

#endif  // GBM_AD_TAPE_H_
