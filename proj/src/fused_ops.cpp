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

#include "mder/fused_ops.hpp"

#include <cmath>
#include <limits>
#include <memory>
#include <vector>

#include "mder/error.hpp"
#include "mder/kernels.hpp"

namespace mder::num {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var lstm_recurrence(Var gate_inputs, Var recurrent,
                    std::span<const std::uint8_t> mask, bool reverse) {
  const Shape& gs = gate_inputs.shape();
  const Shape& ws = recurrent.shape();
  if (gs.size() != 3 || ws.size() != 2 || ws[1] != 4 * ws[0] || gs[2] != ws[1]) {
    throw ShapeError("lstm_recurrence: gates " + shape_string(gs) +
                     ", recurrent " + shape_string(ws));
  }
  const std::size_t batch = gs[0], steps = gs[1], hidden = ws[0];
  const std::size_t g4 = 4 * hidden;
  if (mask.size() != batch * steps) throw ShapeError("lstm_recurrence: mask size");

  // Saved per (b, t): activated gates, previous h and c, new c.
  auto acts = std::make_shared<std::vector<double>>(batch * steps * g4, 0.0);
  auto h_prev = std::make_shared<std::vector<double>>(batch * steps * hidden, 0.0);
  auto c_prev = std::make_shared<std::vector<double>>(batch * steps * hidden, 0.0);
  auto c_new = std::make_shared<std::vector<double>>(batch * steps * hidden, 0.0);

  Tensor out({batch, steps, hidden});
  std::vector<double> h(batch * hidden, 0.0), c(batch * hidden, 0.0);
  std::vector<double> pre(batch * g4);
  const double* gin = gate_inputs.value().ptr();
  const double* w = recurrent.value().ptr();

  for (std::size_t s = 0; s < steps; ++s) {
    const std::size_t t = reverse ? steps - 1 - s : s;
    kernels::gemm_nn(batch, g4, hidden, h.data(), w, pre.data(), false);
    for (std::size_t b = 0; b < batch; ++b) {
      const std::size_t bt = b * steps + t;
      if (!mask[bt]) continue;
      double* hb = h.data() + b * hidden;
      double* cb = c.data() + b * hidden;
      std::copy_n(hb, hidden, h_prev->data() + bt * hidden);
      std::copy_n(cb, hidden, c_prev->data() + bt * hidden);
      const double* x = gin + bt * g4;
      const double* p = pre.data() + b * g4;
      double* a = acts->data() + bt * g4;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double ig = sigmoid(x[j] + p[j]);
        const double fg = sigmoid(x[hidden + j] + p[hidden + j]);
        const double gg = std::tanh(x[2 * hidden + j] + p[2 * hidden + j]);
        const double og = sigmoid(x[3 * hidden + j] + p[3 * hidden + j]);
        a[j] = ig;
        a[hidden + j] = fg;
        a[2 * hidden + j] = gg;
        a[3 * hidden + j] = og;
        cb[j] = fg * cb[j] + ig * gg;
        hb[j] = og * std::tanh(cb[j]);
      }
      std::copy_n(cb, hidden, c_new->data() + bt * hidden);
      std::copy_n(hb, hidden, out.ptr() + bt * hidden);
    }
  }

  std::vector<std::uint8_t> saved_mask(mask.begin(), mask.end());
  const std::size_t ig_id = gate_inputs.id(), w_id = recurrent.id();
  return gate_inputs.tape()->record(
      "lstm_recurrence", std::move(out), {gate_inputs, recurrent},
      [=, saved_mask = std::move(saved_mask)](Tape& tape, std::size_t self) {
        const Tensor& gout = tape.grad(self);
        std::vector<double> dgates(batch * steps * g4, 0.0);
        std::vector<double> dh(batch * hidden, 0.0), dc(batch * hidden, 0.0);
        std::vector<double> dh_rec(batch * hidden);
        std::vector<double> dstep(batch * g4);
        std::vector<double> w_t(g4 * hidden);
        kernels::transpose(hidden, g4, tape.value(w_id).ptr(), w_t.data());

        for (std::size_t s = steps; s-- > 0;) {
          const std::size_t t = reverse ? steps - 1 - s : s;
          std::fill(dstep.begin(), dstep.end(), 0.0);
          for (std::size_t b = 0; b < batch; ++b) {
            const std::size_t bt = b * steps + t;
            if (!saved_mask[bt]) continue;
            const double* a = acts->data() + bt * g4;
            const double* cp = c_prev->data() + bt * hidden;
            const double* cn = c_new->data() + bt * hidden;
            const double* go = gout.ptr() + bt * hidden;
            double* dhb = dh.data() + b * hidden;
            double* dcb = dc.data() + b * hidden;
            double* d = dstep.data() + b * g4;
            for (std::size_t j = 0; j < hidden; ++j) {
              const double ig = a[j], fg = a[hidden + j];
              const double gg = a[2 * hidden + j], og = a[3 * hidden + j];
              const double tc = std::tanh(cn[j]);
              const double dhj = go[j] + dhb[j];
              const double dcj = dcb[j] + dhj * og * (1.0 - tc * tc);
              d[j] = dcj * gg * ig * (1.0 - ig);
              d[hidden + j] = dcj * cp[j] * fg * (1.0 - fg);
              d[2 * hidden + j] = dcj * ig * (1.0 - gg * gg);
              d[3 * hidden + j] = dhj * tc * og * (1.0 - og);
              dcb[j] = dcj * fg;
            }
            std::copy_n(d, g4, dgates.data() + bt * g4);
          }
          kernels::gemm_nn(batch, hidden, g4, dstep.data(), w_t.data(),
                           dh_rec.data(), false);
          for (std::size_t b = 0; b < batch; ++b) {
            if (!saved_mask[b * steps + t]) continue;
            std::copy_n(dh_rec.data() + b * hidden, hidden, dh.data() + b * hidden);
          }
        }

        if (tape.requires_grad(ig_id)) {
          Tensor& g = tape.grad(ig_id);
          for (std::size_t i = 0; i < dgates.size(); ++i) g[i] += dgates[i];
        }
        if (tape.requires_grad(w_id)) {
          kernels::gemm_tn(batch * steps, g4, hidden, h_prev->data(),
                           dgates.data(), tape.grad(w_id).ptr(), true);
        }
      });
}

Var strided_conv_relu_max(Var x, Var weight, Var bias, std::size_t stride) {
  const Shape& xs = x.shape();
  const Shape& ws = weight.shape();
  if (xs.size() != 2 || ws.size() != 1 || bias.shape() != ws || stride == 0) {
    throw ShapeError("strided_conv_relu_max: x " + shape_string(xs) +
                     ", weight " + shape_string(ws) + ", bias " +
                     shape_string(bias.shape()));
  }
  const std::size_t rows = xs[0], width = xs[1], filters = ws[0];
  const std::size_t taps = (width + stride - 1) / stride;
  const double* xv = x.value().ptr();
  const double* wv = weight.value().ptr();
  const double* bv = bias.value().ptr();

  Tensor out({rows, filters});
  // Winning tap per (row, filter); -1 when the maximum is a clipped zero.
  std::vector<long> winner(rows * filters, -1);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* xr = xv + r * width;
    for (std::size_t f = 0; f < filters; ++f) {
      double best = 0.0;
      long best_tap = -1;
      double best_pre = -std::numeric_limits<double>::infinity();
      long first_tap = 0;
      for (std::size_t p = 0; p < taps; ++p) {
        const double z = wv[f] * xr[p * stride] + bv[f];
        if (z > best_pre) {
          best_pre = z;
          first_tap = static_cast<long>(p);
        }
      }
      if (best_pre > 0.0) {
        best = best_pre;
        best_tap = first_tap;
      }
      out[r * filters + f] = best;
      winner[r * filters + f] = best_tap;
    }
  }

  const std::size_t xi = x.id(), wi = weight.id(), bi = bias.id();
  return x.tape()->record(
      "strided_conv_relu_max", std::move(out), {x, weight, bias},
      [=, winner = std::move(winner)](Tape& t, std::size_t self) {
        const Tensor& g = t.grad(self);
        const Tensor& xv = t.value(xi);
        const Tensor& wv = t.value(wi);
        const bool need_x = t.requires_grad(xi);
        const bool need_w = t.requires_grad(wi);
        const bool need_b = t.requires_grad(bi);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t f = 0; f < filters; ++f) {
            const long tap = winner[r * filters + f];
            if (tap < 0) continue;
            const double gv = g[r * filters + f];
            const std::size_t col = static_cast<std::size_t>(tap) * stride;
            if (need_x) t.grad(xi)[r * width + col] += gv * wv[f];
            if (need_w) t.grad(wi)[f] += gv * xv[r * width + col];
            if (need_b) t.grad(bi)[f] += gv;
          }
        }
      });
}

}  // namespace mder::num
