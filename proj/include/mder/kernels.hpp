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

// Dense kernels over raw row-major buffers. Every output element is
// accumulated over the reduction index in ascending order, independent of
// how many rows are computed together, so results are bitwise stable under
// batching.
namespace mder::num::kernels {

// C[MxN] (+)= A[MxK] * B[KxN]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate);

// C[MxN] (+)= A[MxK] * B^T, with B stored as [NxK].
void gemm_nt(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate);

// C[KxN] (+)= A^T * B, with A stored as [MxK] and B as [MxN].
void gemm_tn(std::size_t m, std::size_t n, std::size_t k, const double* a,
             const double* b, double* c, bool accumulate);

// out[cols x rows] = in[rows x cols]^T
void transpose(std::size_t rows, std::size_t cols, const double* in,
               double* out);

}  // namespace mder::num::kernels
