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
#include <cstdint>
#include <span>

#include "mder/tape.hpp"

namespace mder::num {

// One direction of an LSTM over a padded batch.
//
// `gate_inputs` is (B, T, 4H): the input projection x_t W_ih + b, gates in
// i, f, g, o order. `recurrent` is (H, 4H). `mask` is B*T row-major. At
// masked steps the state is carried through unchanged and the output is
// zero. With `reverse` the sequence is consumed from t = T-1 down to 0.
// Returns (B, T, H).
Var lstm_recurrence(Var gate_inputs, Var recurrent,
                    std::span<const std::uint8_t> mask, bool reverse);

// Per row of `x` (N, W): subsample the features with the given stride,
// apply each filter's scalar weight and bias, ReLU, and keep the maximum
// over the subsampled positions. `weight` and `bias` are (F). Returns (N, F).
Var strided_conv_relu_max(Var x, Var weight, Var bias, std::size_t stride);

}  // namespace mder::num
