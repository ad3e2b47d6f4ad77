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

#include "mder/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mder/error.hpp"
#include "mder/kernels.hpp"

namespace mder::num {

namespace {

std::size_t leading_size(const Shape& s, std::size_t axis) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < axis; ++i) n *= s[i];
  return n;
}

std::size_t trailing_size(const Shape& s, std::size_t axis) {
  std::size_t n = 1;
  for (std::size_t i = axis + 1; i < s.size(); ++i) n *= s[i];
  return n;
}

Shape drop_axis(const Shape& s, std::size_t axis) {
  Shape out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i != axis) out.push_back(s[i]);
  }
  if (out.empty()) out.push_back(1);
  return out;
}

void require_same_tape(Var a, Var b, const char* op) {
  if (a.tape() != b.tape()) {
    throw ShapeError(std::string(op) + ": operands from different tapes");
  }
}

// Number of times b repeats over a, given that b's shape is a suffix of a's.
std::size_t broadcast_repeats(const Shape& a, const Shape& b, const char* op) {
  if (b.size() > a.size() ||
      !std::equal(b.begin(), b.end(), a.end() - static_cast<long>(b.size()))) {
    throw ShapeError(std::string(op) + ": cannot broadcast " + shape_string(b) +
                     " over " + shape_string(a));
  }
  return shape_size(a) / shape_size(b);
}

template <typename F, typename DA, typename DB>
Var binary(const char* op, Var a, Var b, F f, DA da, DB db) {
  require_same_tape(a, b, op);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const std::size_t reps = broadcast_repeats(av.shape(), bv.shape(), op);
  const std::size_t inner = bv.size();
  Tensor out(av.shape());
  for (std::size_t r = 0; r < reps; ++r) {
    for (std::size_t j = 0; j < inner; ++j) {
      const std::size_t i = r * inner + j;
      out[i] = f(av[i], bv[j]);
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record(op, std::move(out), {a, b},
                          [ia, ib, reps, inner, da, db](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& av = t.value(ia);
    const Tensor& bv = t.value(ib);
    if (t.requires_grad(ia)) {
      Tensor& ga = t.grad(ia);
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t j = 0; j < inner; ++j) {
          const std::size_t i = r * inner + j;
          ga[i] += da(g[i], av[i], bv[j]);
        }
      }
    }
    if (t.requires_grad(ib)) {
      Tensor& gb = t.grad(ib);
      for (std::size_t r = 0; r < reps; ++r) {
        for (std::size_t j = 0; j < inner; ++j) {
          const std::size_t i = r * inner + j;
          gb[j] += db(g[i], av[i], bv[j]);
        }
      }
    }
  });
}

template <typename F, typename D>
Var unary(const char* op, Var a, F f, D d) {
  const Tensor& av = a.value();
  Tensor out(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = f(av[i]);
  const std::size_t ia = a.id();
  return a.tape()->record(op, std::move(out), {a},
                          [ia, d](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) gx[i] += d(g[i], x[i], y[i]);
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_same_tape(a, b, "matmul");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (bs.size() != 2 || as.back() != bs[0]) {
    throw ShapeError("matmul: " + shape_string(as) + " x " + shape_string(bs));
  }
  const std::size_t k = bs[0], n = bs[1];
  const std::size_t m = a.value().size() / k;
  Shape out_shape = as;
  out_shape.back() = n;
  Tensor out(out_shape);
  kernels::gemm_nn(m, n, k, a.value().ptr(), b.value().ptr(), out.ptr(), false);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b},
                          [ia, ib, m, n, k](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    if (t.requires_grad(ia)) {
      kernels::gemm_nt(m, k, n, g.ptr(), t.value(ib).ptr(), t.grad(ia).ptr(), true);
    }
    if (t.requires_grad(ib)) {
      kernels::gemm_tn(m, n, k, t.value(ia).ptr(), g.ptr(), t.grad(ib).ptr(), true);
    }
  });
}

Var bmm(Var a, Var b, bool transpose_b) {
  require_same_tape(a, b, "bmm");
  const Shape& as = a.shape();
  const Shape& bs = b.shape();
  if (as.size() != 3 || bs.size() != 3 || as[0] != bs[0] ||
      as[2] != (transpose_b ? bs[2] : bs[1])) {
    throw ShapeError("bmm: " + shape_string(as) + " x " + shape_string(bs) +
                     (transpose_b ? " (transposed)" : ""));
  }
  const std::size_t batch = as[0], m = as[1], k = as[2];
  const std::size_t n = transpose_b ? bs[1] : bs[2];
  Tensor out({batch, m, n});
  for (std::size_t i = 0; i < batch; ++i) {
    const double* ap = a.value().ptr() + i * m * k;
    const double* bp = b.value().ptr() + i * k * n;
    double* cp = out.ptr() + i * m * n;
    if (transpose_b) {
      kernels::gemm_nt(m, n, k, ap, bp, cp, false);
    } else {
      kernels::gemm_nn(m, n, k, ap, bp, cp, false);
    }
  }
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("bmm", std::move(out), {a, b},
                          [ia, ib, batch, m, n, k, transpose_b](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const bool need_a = t.requires_grad(ia);
    const bool need_b = t.requires_grad(ib);
    for (std::size_t i = 0; i < batch; ++i) {
      const double* gp = g.ptr() + i * m * n;
      const double* ap = t.value(ia).ptr() + i * m * k;
      const double* bp = t.value(ib).ptr() + i * k * n;
      if (need_a) {
        double* gap = t.grad(ia).ptr() + i * m * k;
        if (transpose_b) {
          kernels::gemm_nn(m, k, n, gp, bp, gap, true);  // dA = dC B
        } else {
          kernels::gemm_nt(m, k, n, gp, bp, gap, true);  // dA = dC B^T
        }
      }
      if (need_b) {
        double* gbp = t.grad(ib).ptr() + i * k * n;
        if (transpose_b) {
          kernels::gemm_tn(m, k, n, gp, ap, gbp, true);  // dB = dC^T A
        } else {
          kernels::gemm_tn(m, n, k, ap, gp, gbp, true);  // dB = A^T dC
        }
      }
    }
  });
}

Var add(Var a, Var b) {
  return binary(
      "add", a, b, [](double x, double y) { return x + y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return g; });
}

Var sub(Var a, Var b) {
  return binary(
      "sub", a, b, [](double x, double y) { return x - y; },
      [](double g, double, double) { return g; },
      [](double g, double, double) { return -g; });
}

Var mul(Var a, Var b) {
  return binary(
      "mul", a, b, [](double x, double y) { return x * y; },
      [](double g, double, double y) { return g * y; },
      [](double g, double x, double) { return g * x; });
}

Var scale(Var a, double factor) {
  return unary(
      "scale", a, [factor](double x) { return x * factor; },
      [factor](double g, double, double) { return g * factor; });
}

Var sigmoid(Var a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double g, double, double y) { return g * y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary(
      "tanh", a, [](double x) { return std::tanh(x); },
      [](double g, double, double y) { return g * (1.0 - y * y); });
}

Var relu(Var a) {
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double g, double x, double) { return x > 0.0 ? g : 0.0; });
}

Var softmax(Var a) {
  const Tensor& av = a.value();
  const std::size_t n = av.shape().back();
  const std::size_t rows = av.size() / n;
  Tensor out(av.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.ptr() + r * n;
    double* y = out.ptr() + r * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      y[j] = std::exp(x[j] - mx);
      z += y[j];
    }
    for (std::size_t j = 0; j < n; ++j) y[j] /= z;
  }
  const std::size_t ia = a.id();
  return a.tape()->record("softmax", std::move(out), {a},
                          [ia, rows, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t j = 0; j < n; ++j) dot += g[r * n + j] * y[r * n + j];
      for (std::size_t j = 0; j < n; ++j) {
        gx[r * n + j] += y[r * n + j] * (g[r * n + j] - dot);
      }
    }
  });
}

Var logsumexp(Var a) {
  const Tensor& av = a.value();
  const std::size_t n = av.shape().back();
  const std::size_t rows = av.size() / n;
  Tensor out(drop_axis(av.shape(), av.rank() - 1));
  for (std::size_t r = 0; r < rows; ++r) {
    const double* x = av.ptr() + r * n;
    const double mx = *std::max_element(x, x + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(x[j] - mx);
    out[r] = mx + std::log(z);
  }
  const std::size_t ia = a.id();
  return a.tape()->record("logsumexp", std::move(out), {a},
                          [ia, rows, n](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    const Tensor& y = t.value(self);
    const Tensor& x = t.value(ia);
    Tensor& gx = t.grad(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t j = 0; j < n; ++j) {
        gx[r * n + j] += g[r] * std::exp(x[r * n + j] - y[r]);
      }
    }
  });
}

MaxResult max(Var a, std::size_t axis) {
  const Tensor& av = a.value();
  if (axis >= av.rank()) throw ShapeError("max: axis out of range");
  const std::size_t outer = leading_size(av.shape(), axis);
  const std::size_t len = av.dim(axis);
  const std::size_t inner = trailing_size(av.shape(), axis);
  Tensor out(drop_axis(av.shape(), axis));
  std::vector<std::size_t> argmax(outer * inner, 0);
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t in = 0; in < inner; ++in) {
      const double* base = av.ptr() + o * len * inner + in;
      std::size_t best = 0;
      for (std::size_t j = 1; j < len; ++j) {
        if (base[j * inner] > base[best * inner]) best = j;
      }
      out[o * inner + in] = base[best * inner];
      argmax[o * inner + in] = best;
    }
  }
  const std::size_t ia = a.id();
  Var values = a.tape()->record("max", std::move(out), {a},
                                [ia, argmax, len, inner](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gx = t.grad(ia);
    for (std::size_t k = 0; k < g.size(); ++k) {
      const std::size_t o = k / inner, in = k % inner;
      gx[o * len * inner + argmax[k] * inner + in] += g[k];
    }
  });
  return {values, std::move(argmax)};
}

Var gather(Var table, std::span<const std::size_t> rows) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) throw ShapeError("gather: table must be a matrix");
  if (rows.empty()) throw ShapeError("gather: no rows requested");
  const std::size_t vocab = tv.dim(0), width = tv.dim(1);
  Tensor out({rows.size(), width});
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r] >= vocab) {
      throw ShapeError("gather: row " + std::to_string(rows[r]) +
                       " out of range for table of " + std::to_string(vocab));
    }
    std::copy_n(tv.ptr() + rows[r] * width, width, out.ptr() + r * width);
  }
  const std::size_t it = table.id();
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  return table.tape()->record("gather", std::move(out), {table},
                              [it, idx = std::move(idx), width](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& gt = t.grad(it);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      double* dst = gt.ptr() + idx[r] * width;
      const double* src = g.ptr() + r * width;
      for (std::size_t j = 0; j < width; ++j) dst[j] += src[j];
    }
  });
}

Var concat(std::span<const Var> parts, std::size_t axis) {
  if (parts.empty()) throw ShapeError("concat: no inputs");
  const Shape& first = parts[0].shape();
  if (axis >= first.size()) throw ShapeError("concat: axis out of range");
  Shape out_shape = first;
  out_shape[axis] = 0;
  std::vector<std::size_t> widths;
  const std::size_t inner = trailing_size(first, axis);
  for (const Var& p : parts) {
    require_same_tape(parts[0], p, "concat");
    const Shape& s = p.shape();
    bool ok = s.size() == first.size();
    for (std::size_t i = 0; ok && i < s.size(); ++i) {
      if (i != axis && s[i] != first[i]) ok = false;
    }
    if (!ok) {
      throw ShapeError("concat: " + shape_string(s) + " vs " + shape_string(first));
    }
    widths.push_back(s[axis] * inner);
    out_shape[axis] += s[axis];
  }
  const std::size_t outer = leading_size(first, axis);
  const std::size_t row = out_shape[axis] * inner;
  Tensor out(out_shape);
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& v = parts[p].value();
    for (std::size_t o = 0; o < outer; ++o) {
      std::copy_n(v.ptr() + o * widths[p], widths[p], out.ptr() + o * row + offset);
    }
    offset += widths[p];
  }
  std::vector<std::size_t> ids;
  for (const Var& p : parts) ids.push_back(p.id());
  return parts[0].tape()->record("concat", std::move(out), parts,
                                 [ids, widths, outer, row](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    std::size_t offset = 0;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      if (t.requires_grad(ids[p])) {
        Tensor& gp = t.grad(ids[p]);
        for (std::size_t o = 0; o < outer; ++o) {
          const double* src = g.ptr() + o * row + offset;
          double* dst = gp.ptr() + o * widths[p];
          for (std::size_t j = 0; j < widths[p]; ++j) dst[j] += src[j];
        }
      }
      offset += widths[p];
    }
  });
}

Var slice(Var a, std::size_t axis, std::size_t start, std::size_t stop,
          std::size_t step) {
  const Shape& s = a.shape();
  if (axis >= s.size() || step == 0 || start >= stop || stop > s[axis]) {
    throw ShapeError("slice: invalid range [" + std::to_string(start) + ", " +
                     std::to_string(stop) + ") step " + std::to_string(step) +
                     " on " + shape_string(s));
  }
  const std::size_t count = (stop - start + step - 1) / step;
  const std::size_t outer = leading_size(s, axis);
  const std::size_t inner = trailing_size(s, axis);
  const std::size_t len = s[axis];
  Shape out_shape = s;
  out_shape[axis] = count;
  Tensor out(out_shape);
  const Tensor& av = a.value();
  for (std::size_t o = 0; o < outer; ++o) {
    for (std::size_t c = 0; c < count; ++c) {
      std::copy_n(av.ptr() + (o * len + start + c * step) * inner, inner,
                  out.ptr() + (o * count + c) * inner);
    }
  }
  const std::size_t ia = a.id();
  return a.tape()->record("slice", std::move(out), {a},
                          [=](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t c = 0; c < count; ++c) {
        const double* src = g.ptr() + (o * count + c) * inner;
        double* dst = ga.ptr() + (o * len + start + c * step) * inner;
        for (std::size_t j = 0; j < inner; ++j) dst[j] += src[j];
      }
    }
  });
}

Var reshape(Var a, Shape shape) {
  Tensor out = a.value().reshaped(std::move(shape));
  const std::size_t ia = a.id();
  return a.tape()->record("reshape", std::move(out), {a},
                          [ia](Tape& t, std::size_t self) {
    const Tensor& g = t.grad(self);
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
  });
}

Var sum(Var a) {
  double total = 0.0;
  for (double v : a.value().data()) total += v;
  const std::size_t ia = a.id();
  return a.tape()->record("sum", Tensor::scalar(total), {a},
                          [ia](Tape& t, std::size_t self) {
    const double g = t.grad(self)[0];
    Tensor& ga = t.grad(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += g;
  });
}

Var mean(Var a) { return scale(sum(a), 1.0 / static_cast<double>(a.value().size())); }

}  // namespace mder::num
