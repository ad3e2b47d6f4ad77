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

#include "mder/kernels.hpp"

#include <algorithm>
#include <vector>

namespace mder::num::kernels {

namespace {
constexpr std::size_t kColBlock = 256;
constexpr std::size_t kRowBlock = 32;
}  // namespace

void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  if (!accumulate) std::fill(c, c + m * n, 0.0);
  for (std::size_t j0 = 0; j0 < n; j0 += kColBlock) {
    const std::size_t j1 = std::min(n, j0 + kColBlock);
    for (std::size_t i0 = 0; i0 < m; i0 += kRowBlock) {
      const std::size_t i1 = std::min(m, i0 + kRowBlock);
      for (std::size_t p = 0; p < k; ++p) {
        const double* brow = b + p * n;
        for (std::size_t i = i0; i < i1; ++i) {
          const double av = a[i * k + p];
          if (av == 0.0) continue;
          double* crow = c + i * n;
          for (std::size_t j = j0; j < j1; ++j) crow[j] += av * brow[j];
        }
      }
    }
  }
}

void transpose(std::size_t rows, std::size_t cols, const double* in,
               double* out) {
  constexpr std::size_t kTile = 32;
  for (std::size_t r0 = 0; r0 < rows; r0 += kTile) {
    for (std::size_t c0 = 0; c0 < cols; c0 += kTile) {
      const std::size_t r1 = std::min(rows, r0 + kTile);
      const std::size_t c1 = std::min(cols, c0 + kTile);
      for (std::size_t r = r0; r < r1; ++r) {
        for (std::size_t cc = c0; cc < c1; ++cc) out[cc * rows + r] = in[r * cols + cc];
      }
    }
  }
}

void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  std::vector<double> bt(k * n);
  transpose(n, k, b, bt.data());
  gemm_nn(m, n, k, a, bt.data(), c, accumulate);
}

void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate) {
  std::vector<double> at(k * m);
  transpose(m, k, a, at.data());
  gemm_nn(k, n, m, at.data(), b, c, accumulate);
}

}  // namespace mder::num::kernels
