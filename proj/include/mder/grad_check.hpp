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
#include <functional>
#include <span>
#include <vector>

#include "mder/tape.hpp"

namespace mder::num {

// Builds a scalar from parameter handles on the given tape.
using ScalarFunction = std::function<Var(Tape&, std::span<const Var>)>;

struct GradCheckOptions {
  double eps = 1e-5;
  // Adaptive mode when non-empty: each coordinate gets Richardson-combined
  // central differences, (4 D(h) - D(2h)) / 3, at eps and at every step
  // listed here, and keeps the one with the smallest predicted error
  // |D(h) - D(2h)| + rounding_ulps * ulp(f) / h. Small steps lose tiny
  // gradients to rounding in f; large ones cross relu/max kinks. The choice
  // never consults the analytic gradient.
  std::vector<double> adaptive_steps;
  double rounding_ulps = 16.0;
  // 0 checks every coordinate; otherwise this many coordinates per
  // parameter tensor, sampled without replacement with `seed`.
  std::size_t max_coords_per_param = 0;
  std::uint64_t seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t worst_param = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coords_checked = 0;
};

// Central differences vs. reverse mode. Relative error per coordinate is
// |a - n| / max(1e-8, |a| + |n|). Throws RuntimeFailure if any recorded
// value is non-finite.
GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor> params,
                           const GradCheckOptions& options = {});

// Value of f at params without recording gradients.
double evaluate(const ScalarFunction& f, std::span<const Tensor> params);

}  // namespace mder::num
