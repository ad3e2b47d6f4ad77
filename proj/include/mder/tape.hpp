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

#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "mder/tensor.hpp"

namespace mder::num {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; valid while the
// Tape lives.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  const Tensor& value() const;
  const Shape& shape() const { return value().shape(); }
  std::size_t dim(std::size_t axis) const { return value().dim(axis); }
  Tape* tape() const { return tape_; }
  std::size_t id() const { return id_; }
  bool requires_grad() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

// Reverse-mode recording of one computation. Confined to one thread.
class Tape {
 public:
  // Called during backward with the node's own id; accumulates into the
  // gradients of the node's inputs.
  using BackwardFn = std::function<void(Tape&, std::size_t)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaf whose gradient is reported by backward(). The tensor is referenced,
  // not copied, and must outlive the tape.
  Var parameter(const Tensor& value);
  // Read-only leaf referencing external storage (no gradient).
  Var input(const Tensor& value);
  Var constant(Tensor value);
  // Records an op result. The node needs a gradient iff any input does; fn
  // is dropped otherwise.
  Var record(const char* op, Tensor value, std::initializer_list<Var> inputs,
             BackwardFn fn);
  Var record(const char* op, Tensor value, std::span<const Var> inputs,
             BackwardFn fn);

  const Tensor& value(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  // Gradient buffer of a node, zero-initialized on first access.
  Tensor& grad(std::size_t id);
  bool has_grad(std::size_t id) const { return nodes_[id].has_grad; }

  // Seeds d(output)/d(output) = 1 and replays the tape once. Returns one
  // gradient per parameter() call, in call order. Throws on non-scalar
  // output or a second call.
  std::vector<Tensor> backward(Var output);

  // Throws RuntimeFailure naming the first node holding NaN/Inf.
  void check_finite() const;

  std::size_t size() const { return nodes_.size(); }
  std::size_t num_parameters() const { return parameters_.size(); }

 private:
  struct Node {
    const char* op = "";
    Tensor owned;
    const Tensor* external = nullptr;
    Tensor grad;
    bool has_grad = false;
    bool requires_grad = false;
    BackwardFn backward;
  };

  // A deque keeps references from value() and shape() valid while later
  // ops append nodes.
  std::deque<Node> nodes_;
  std::vector<std::size_t> parameters_;
  bool replayed_ = false;
};

inline const Tensor& Var::value() const { return tape_->value(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace mder::num
