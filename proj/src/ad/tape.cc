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

#include "gbm/ad/tape.h"

#include <cmath>
#include <sstream>

#include "gbm/status.h"

namespace gbm::ad {

std::string ShapeToString(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

Tensor::Tensor(Shape s, std::vector<double> values)
    : shape(std::move(s)), data(std::move(values)) {
  if (data.size() != NumElements(shape)) {
    throw Error(ErrorCode::kShapeMismatch,
                "tensor of shape " + ShapeToString(shape) + " given " +
                    std::to_string(data.size()) + " values");
  }
}

bool Tensor::AllFinite() const {
  for (double v : data) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

const Tensor& Var::value() const { return tape_->value(id_); }
bool Var::requires_grad() const { return tape_->requires_grad(id_); }

Parameter& ParameterStore::Add(std::string name, Tensor value) {
  if (index_.contains(name)) {
    throw Error(ErrorCode::kInvalidArgument, "duplicate parameter " + name);
  }
  index_.emplace(name, params_.size());
  Tensor grad = Tensor::Zeros(value.shape);
  params_.push_back(Parameter{std::move(name), std::move(value),
                              std::move(grad)});
  return params_.back();
}

Parameter& ParameterStore::Get(std::string_view name) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) {
    throw Error(ErrorCode::kInvalidArgument,
                "unknown parameter " + std::string(name));
  }
  return params_[it->second];
}

const Parameter& ParameterStore::Get(std::string_view name) const {
  return const_cast<ParameterStore*>(this)->Get(name);
}

bool ParameterStore::Contains(std::string_view name) const {
  return index_.contains(std::string(name));
}

void ParameterStore::ZeroGrad() {
  for (auto& p : params_) std::fill(p.grad.data.begin(), p.grad.data.end(), 0);
}

std::size_t ParameterStore::NumScalars() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.value.size();
  return n;
}

Var Tape::Push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::Constant(Tensor value) {
  if (!value.AllFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, "constant input");
  }
  Node node;
  node.owned = std::move(value);
  return Push(std::move(node));
}

Var Tape::Leaf(Tensor value) {
  if (!value.AllFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, "leaf input");
  }
  Node node;
  node.owned = std::move(value);
  node.requires_grad = true;
  return Push(std::move(node));
}

Var Tape::Bind(Parameter& param) {
  if (!param.value.AllFinite()) {
    throw Error(ErrorCode::kNonFiniteInput, "parameter " + param.name);
  }
  if (param.grad.shape != param.value.shape) {
    param.grad = Tensor::Zeros(param.value.shape);
  }
  Node node;
  node.external = &param.value;
  node.external_grad = &param.grad;
  node.requires_grad = true;
  return Push(std::move(node));
}

Var Tape::Record(Tensor value, std::initializer_list<Var> inputs,
                 BackwardFn backward, std::string_view op_name) {
  return Record(std::move(value), std::vector<Var>(inputs),
                std::move(backward), op_name);
}

Var Tape::Record(Tensor value, const std::vector<Var>& inputs,
                 BackwardFn backward, std::string_view op_name) {
  if (!value.AllFinite()) {
    throw Error(ErrorCode::kNonFiniteInput,
                "non-finite value produced by " + std::string(op_name));
  }
  Node node;
  node.owned = std::move(value);
  for (const Var& in : inputs) {
    if (in.tape() != this) {
      throw Error(ErrorCode::kInvalidArgument,
                  std::string(op_name) + ": input from another tape");
    }
    node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(backward);
  return Push(std::move(node));
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& node = nodes_[id];
  return node.external ? *node.external : node.owned;
}

Tensor& Tape::GradBuffer(std::size_t id) {
  Node& node = nodes_[id];
  node.grad_touched = true;
  if (node.external_grad) return *node.external_grad;
  if (node.grad.shape != value(id).shape || node.grad.data.empty()) {
    node.grad = Tensor::Zeros(value(id).shape);
  }
  return node.grad;
}

const Tensor& Tape::Grad(Var v) { return GradBuffer(v.id()); }

void Tape::Backward(Var loss) {
  if (loss.tape() != this) {
    throw Error(ErrorCode::kInvalidArgument, "loss recorded on another tape");
  }
  if (loss.size() != 1) {
    throw Error(ErrorCode::kShapeMismatch,
                "Backward expects a scalar, got " +
                    ShapeToString(loss.shape()));
  }
  GradBuffer(loss.id())[0] += 1.0;
  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& node = nodes_[i];
    if (!node.grad_touched || !node.backward) continue;
    node.backward(*this, i);
  }
}

}  // namespace gbm::ad
