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

#include "mder/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mder/error.hpp"
#include "mder/ops.hpp"

namespace mder::num {

namespace {

double run(const ScalarFunction& f, std::span<const Tensor> params) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  // Constants, so no backward closures are kept.
  for (const Tensor& p : params) vars.push_back(tape.constant(p));
  Var out = f(tape, vars);
  if (out.value().size() != 1) throw ShapeError("grad_check: function is not scalar");
  tape.check_finite();
  return out.value()[0];
}

}  // namespace

double evaluate(const ScalarFunction& f, std::span<const Tensor> params) {
  return run(f, params);
}

GradCheckReport grad_check(const ScalarFunction& f, std::vector<Tensor> params,
                           const GradCheckOptions& options) {
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& p : params) vars.push_back(tape.parameter(p));
    Var out = f(tape, vars);
    tape.check_finite();
    analytic = tape.backward(out);
  }

  const double f_ulp = [&] {
    const double f0 = run(f, params);
    return std::nextafter(std::abs(f0), std::numeric_limits<double>::infinity()) - std::abs(f0);
  }();
  GradCheckReport report;
  std::mt19937_64 rng(options.seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<std::size_t> coords(params[p].size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (options.max_coords_per_param != 0 &&
        coords.size() > options.max_coords_per_param) {
      std::shuffle(coords.begin(), coords.end(), rng);
      coords.resize(options.max_coords_per_param);
      std::sort(coords.begin(), coords.end());
    }
    for (std::size_t i : coords) {
      const double original = params[p][i];
      // Divides by the representable step, not 2 * step.
      const auto central = [&](double step) {
        const double up = original + step;
        const double down = original - step;
        params[p][i] = up;
        const double plus = run(f, params);
        params[p][i] = down;
        const double minus = run(f, params);
        params[p][i] = original;
        return (plus - minus) / (up - down);
      };
      double numeric = 0.0;
      if (options.adaptive_steps.empty()) {
        numeric = central(options.eps);
      } else {
        std::vector<double> steps = {options.eps};
        steps.insert(steps.end(), options.adaptive_steps.begin(), options.adaptive_steps.end());
        double best = std::numeric_limits<double>::infinity();
        for (double h : steps) {
          const double d1 = central(h);
          const double d2 = central(2.0 * h);
          const double predicted = std::abs(d1 - d2) + options.rounding_ulps * f_ulp / h;
          if (predicted < best) {
            best = predicted;
            numeric = (4.0 * d1 - d2) / 3.0;
          }
        }
      }
      const double a = analytic[p][i];
      const double err =
          std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      ++report.coords_checked;
      if (err > report.max_relative_error || report.coords_checked == 1) {
        report.max_relative_error = err;
        report.worst_param = p;
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
    }
  }
  return report;
}

}  // namespace mder::num
