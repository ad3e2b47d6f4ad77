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
#include <span>
#include <vector>

#include "mder/tape.hpp"

// Differentiable operations. Binary elementwise ops broadcast the second
// operand over leading axes only: its shape must equal the first operand's
// shape or a suffix of it.
namespace mder::num {

// (..., K) x (K, N) -> (..., N)
Var matmul(Var a, Var b);
// Batched: (B, T, K) x (B, K, N) -> (B, T, N); with transpose_b the second
// operand is (B, N, K).
Var bmm(Var a, Var b, bool transpose_b);

Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);

// Over the last axis, with max subtraction.
Var softmax(Var a);
// Over the last axis; the result drops that axis (rank-1 input -> {1}).
Var logsumexp(Var a);

struct MaxResult {
  Var values;
  std::vector<std::size_t> argmax;  // index along `axis`, one per output
};
// Maximum along `axis` (first occurrence wins ties); gradient flows to the
// argmax only.
MaxResult max(Var a, std::size_t axis);

// Rows of a (V, D) table -> (n, D). Gradient is scatter-added.
Var gather(Var table, std::span<const std::size_t> rows);

Var concat(std::span<const Var> parts, std::size_t axis);
Var slice(Var a, std::size_t axis, std::size_t start, std::size_t stop,
          std::size_t step = 1);
Var reshape(Var a, Shape shape);

Var sum(Var a);
Var mean(Var a);

}  // namespace mder::num
