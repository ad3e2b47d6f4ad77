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

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "mder/tape.hpp"
#include "mder/tensor.hpp"

// Linear-chain CRF over the five gold tags (B-M, I-M, B-D, I-D, O, in that
// index order). Emissions are (T, 5) tensors.
namespace mder::crf {

inline constexpr std::size_t kNumTags = 5;
// Score given to forbidden transitions; exp() of it underflows to zero
// against any realistic path score.
inline constexpr double kForbidden = -1e4;

struct Constraints {
  std::array<bool, kNumTags * kNumTags> transition_allowed{};
  std::array<bool, kNumTags> start_allowed{};

  bool allowed(std::size_t from, std::size_t to) const {
    return transition_allowed[from * kNumTags + to];
  }

  static Constraints none();
  // Forbids O->I-X, B-M->I-D, B-D->I-M, I-M->I-D, I-D->I-M and start->I-X.
  static Constraints bio();
};

struct CrfParams {
  num::Tensor transitions{{kNumTags, kNumTags}, 0.0};  // [from][to]
  num::Tensor start{{kNumTags}, 0.0};
  num::Tensor end{{kNumTags}, 0.0};
  Constraints constraints = Constraints::bio();

  // Scores with forbidden entries replaced by kForbidden.
  double transition(std::size_t from, std::size_t to) const;
  double start_score(std::size_t tag) const;
  double end_score(std::size_t tag) const { return end[tag]; }
};

double path_score(const num::Tensor& emissions, std::span<const std::size_t> tags,
                  const CrfParams& crf);

// Forward recursion in log space.
double log_partition(const num::Tensor& emissions, const CrfParams& crf);

// log_partition - path_score(gold).
double nll(const num::Tensor& emissions, std::span<const std::size_t> gold,
           const CrfParams& crf);

// Posterior tag marginals, (T, 5).
num::Tensor marginals(const num::Tensor& emissions, const CrfParams& crf);

struct ViterbiResult {
  std::vector<std::size_t> tags;
  double score = 0.0;  // path_score(tags)
};

// Ties resolve to the lowest tag index, both at backpointers and at the end.
ViterbiResult viterbi(const num::Tensor& emissions, const CrfParams& crf);

// Mean NLL over a padded batch: emissions (B, T, 5), gold B*T row-major,
// sentence b using its first lengths[b] steps. Gradients w.r.t. forbidden
// transition/start entries are zero.
num::Var batch_nll(num::Var emissions, num::Var transitions, num::Var start,
                   num::Var end, const Constraints& constraints,
                   std::span<const std::size_t> lengths,
                   std::span<const std::size_t> gold);

}  // namespace mder::crf
