// Copyright 2026 The MDER Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "mder/tape.hpp"

#include "mder/error.hpp"

namespace mder::num {

Var Tape::parameter(const Tensor& value) {
  Node node;
  node.op = "parameter";
  node.external = &value;
  node.requires_grad = true;
  nodes_.push_back(std::move(node));
  parameters_.push_back(nodes_.size() - 1);
  return Var(this, nodes_.size() - 1);
}

Var Tape::input(const Tensor& value) {
  Node node;
  node.op = "input";
  node.external = &value;
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Tensor value) {
  Node node;
  node.op = "constant";
  node.owned = std::move(value);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(const char* op, Tensor value,
                 std::initializer_list<Var> inputs, BackwardFn fn) {
  return record(op, std::move(value),
                std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(fn));
}

Var Tape::record(const char* op, Tensor value, std::span<const Var> inputs,
                 BackwardFn fn) {
  Node node;
  node.op = op;
  node.owned = std::move(value);
  for (const Var& v : inputs) {
    if (v.tape() != this) throw ShapeError(std::string(op) + ": input from another tape");
    node.requires_grad = node.requires_grad || nodes_[v.id()].requires_grad;
  }
  if (node.requires_grad) node.backward = std::move(fn);
  nodes_.push_back(std::move(node));
  return Var(this, nodes_.size() - 1);
}

const Tensor& Tape::value(std::size_t id) const {
  const Node& n = nodes_[id];
  return n.external ? *n.external : n.owned;
}

Tensor& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (!n.has_grad) {
    n.grad = Tensor(value(id).shape(), 0.0);
    n.has_grad = true;
  }
  return n.grad;
}

std::vector<Tensor> Tape::backward(Var output) {
  if (replayed_) throw RuntimeFailure("backward called twice on one tape");
  if (output.tape() != this) throw ShapeError("backward: output from another tape");
  if (output.value().size() != 1) {
    throw ShapeError("backward requires a scalar output, got " +
                     shape_string(output.shape()));
  }
  replayed_ = true;
  grad(output.id())[0] = 1.0;
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (n.has_grad && n.backward) n.backward(*this, id);
  }
  std::vector<Tensor> grads;
  grads.reserve(parameters_.size());
  for (std::size_t id : parameters_) grads.push_back(grad(id));
  return grads;
}

void Tape::check_finite() const {
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (!value(id).all_finite()) {
      throw RuntimeFailure("non-finite value produced by '" +
                           std::string(nodes_[id].op) + "' (node " +
                           std::to_string(id) + ")");
    }
  }
}

}  // namespace mder::num
