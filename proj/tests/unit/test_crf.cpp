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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mder/corpus.hpp"
#include "mder/crf.hpp"
#include "mder/grad_check.hpp"
#include "mder/ops.hpp"
#include "oracles.hpp"

namespace mder::crf {
namespace {

using num::Tensor;
using testing::random_tensor;

CrfParams random_crf(std::uint64_t seed, bool constrained) {
  CrfParams crf;
  crf.transitions = random_tensor({kNumTags, kNumTags}, seed, 2.0);
  crf.start = random_tensor({kNumTags}, seed + 1000, 2.0);
  crf.end = random_tensor({kNumTags}, seed + 2000, 2.0);
  crf.constraints = constrained ? Constraints::bio() : Constraints::none();
  return crf;
}

CrfParams zero_crf(bool constrained) {
  CrfParams crf;
  crf.constraints = constrained ? Constraints::bio() : Constraints::none();
  return crf;
}

Tensor row(std::initializer_list<double> v) { return Tensor({1, kNumTags}, std::vector<double>(v)); }

bool bio_valid(const std::vector<std::size_t>& tags) {
  std::vector<corpus::Tag> t;
  for (std::size_t i : tags) t.push_back(corpus::tag_from_index(i));
  return !corpus::find_bio_violation(t).has_value();
}

TEST(Crf, PathScoreAnchors) {
  const std::size_t tag2[] = {2};
  EXPECT_DOUBLE_EQ(path_score(row({1, 2, 3, 0, 0}), tag2, zero_crf(true)), 3.0);
  const std::size_t any[] = {0, 1, 4};
  EXPECT_DOUBLE_EQ(path_score(Tensor({3, kNumTags}, 0.0), any, zero_crf(true)), 0.0);
}

TEST(Crf, PathScoreMatchesHandSum) {
  const auto crf = random_crf(5, true);
  const Tensor e = random_tensor({3, kNumTags}, 6);
  const std::size_t tags[] = {2, 3, 4};
  const double expected = crf.start[2] + e[0 * 5 + 2] + crf.transitions[2 * 5 + 3] +
                          e[1 * 5 + 3] + crf.transitions[3 * 5 + 4] + e[2 * 5 + 4] + crf.end[4];
  EXPECT_NEAR(path_score(e, tags, crf), expected, 1e-12);
  const std::size_t bad[] = {2, 7, 4};
  EXPECT_THROW(path_score(e, bad, crf), std::exception);
}

TEST(Crf, LogPartitionAnchors) {
  EXPECT_NEAR(log_partition(row({1, 2, 3, 0, 0}), zero_crf(false)),
              std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0) + 2.0), 1e-12);
  EXPECT_NEAR(log_partition(Tensor({3, kNumTags}, 0.0), zero_crf(false)), 3 * std::log(5.0),
              1e-12);
}

TEST(Crf, MatchesEnumerationOracle) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + rng() % 5;
    const auto crf = random_crf(rng(), trial % 2 == 0);
    const Tensor e = random_tensor({T, kNumTags}, rng(), 3.0);
    const auto oracle = testing::brute_force_crf(e, crf);
    EXPECT_NEAR(log_partition(e, crf), oracle.log_partition, 1e-8);
    const auto v = viterbi(e, crf);
    EXPECT_EQ(v.tags, oracle.best_path);
    EXPECT_NEAR(v.score, oracle.best_score, 1e-9);
    EXPECT_LE(v.score, log_partition(e, crf));
    const Tensor m = marginals(e, crf);
    for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m[i], oracle.marginals[i], 1e-9);
  }
}

TEST(Crf, ViterbiAnchorAndTies) {
  const auto v = viterbi(row({1, 2, 3, 0, 0}), zero_crf(true));
  EXPECT_EQ(v.tags, (std::vector<std::size_t>{2}));
  EXPECT_DOUBLE_EQ(v.score, 3.0);
  // All paths tie under zero scores; the lowest index wins everywhere.
  EXPECT_EQ(viterbi(Tensor({4, kNumTags}, 0.0), zero_crf(true)).tags,
            (std::vector<std::size_t>{0, 0, 0, 0}));
}

TEST(Crf, ConstrainedViterbiIsAlwaysBioValid) {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t T = 1 + rng() % 12;
    const auto crf = random_crf(rng(), true);
    const Tensor e = random_tensor({T, kNumTags}, rng(), 5.0);
    const auto v = viterbi(e, crf);
    ASSERT_TRUE(bio_valid(v.tags)) << "trial " << trial;
    ASSERT_DOUBLE_EQ(v.score, path_score(e, v.tags, crf));
  }
}

TEST(Crf, NllProperties) {
  // Peaked emissions on the gold path.
  const std::size_t gold[] = {0, 1, 4, 2, 3};
  Tensor e({5, kNumTags}, 0.0);
  for (std::size_t t = 0; t < 5; ++t) e[t * kNumTags + gold[t]] = 100.0;
  const auto crf = zero_crf(true);
  const double exact = testing::brute_force_crf(e, crf).log_partition - path_score(e, gold, crf);
  EXPECT_NEAR(nll(e, gold, crf), exact, 1e-9);
  EXPECT_LE(nll(e, gold, crf), 1e-3);

  const Tensor zeros({4, kNumTags}, 0.0);
  const std::size_t any[] = {4, 4, 0, 1};
  EXPECT_NEAR(nll(zeros, any, zero_crf(false)), 4 * std::log(5.0), 1e-12);

  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t T = 1 + rng() % 8;
    const auto crf2 = random_crf(rng(), true);
    const Tensor e2 = random_tensor({T, kNumTags}, rng(), 4.0);
    const auto path = viterbi(random_tensor({T, kNumTags}, rng()), crf2).tags;
    EXPECT_GE(nll(e2, path, crf2), -1e-12);
  }
}

TEST(Crf, EmissionShiftInvariance) {
  const auto crf = random_crf(41, true);
  Tensor e = random_tensor({6, kNumTags}, 42);
  const auto path = viterbi(e, crf);
  const std::size_t gold[] = {0, 1, 4, 2, 3, 4};
  const double z = log_partition(e, crf), loss = nll(e, gold, crf);
  for (double& v : e.data()) v += 1.75;
  EXPECT_NEAR(log_partition(e, crf), z + 6 * 1.75, 1e-10);
  EXPECT_NEAR(nll(e, gold, crf), loss, 1e-10);
  EXPECT_EQ(viterbi(e, crf).tags, path.tags);
}

// Mean batch NLL on a tape, for gradient checks.
num::Var batch_loss(num::Tape&, std::span<const num::Var> p, const Constraints& c,
                    std::span<const std::size_t> lengths, std::span<const std::size_t> gold) {
  return batch_nll(p[0], p[1], p[2], p[3], c, lengths, gold);
}

TEST(Crf, BatchNllMatchesPerSentenceMean) {
  const std::size_t B = 3, T = 4;
  const Tensor e = random_tensor({B, T, kNumTags}, 51);
  const auto crf = random_crf(52, true);
  const std::vector<std::size_t> lengths = {4, 2, 3};
  const std::vector<std::size_t> gold = {0, 1, 4, 2, /**/ 4, 4, 0, 0, /**/ 2, 3, 3, 4};
  num::Tape tape;
  const auto loss = batch_nll(tape.constant(e), tape.constant(crf.transitions),
                              tape.constant(crf.start), tape.constant(crf.end), crf.constraints,
                              lengths, gold);
  double expected = 0.0;
  for (std::size_t b = 0; b < B; ++b) {
    Tensor eb({lengths[b], kNumTags});
    for (std::size_t i = 0; i < eb.size(); ++i) eb[i] = e[b * T * kNumTags + i];
    expected += nll(eb, std::span(gold).subspan(b * T, lengths[b]), crf);
  }
  EXPECT_NEAR(loss.value()[0], expected / B, 1e-10);
}

TEST(Crf, EmissionGradientIsMarginalsMinusGold) {
  const std::size_t T = 5;
  const Tensor e = random_tensor({1, T, kNumTags}, 61);
  const auto crf = random_crf(62, true);
  const std::vector<std::size_t> lengths = {T};
  const std::vector<std::size_t> gold = {2, 3, 4, 0, 1};
  num::Tape tape;
  num::Var ev = tape.parameter(e);
  const auto grads = tape.backward(batch_nll(ev, tape.constant(crf.transitions),
                                             tape.constant(crf.start), tape.constant(crf.end),
                                             crf.constraints, lengths, gold));
  const Tensor m = marginals(e.reshaped({T, kNumTags}), crf);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t k = 0; k < kNumTags; ++k) {
      const double indicator = gold[t] == k ? 1.0 : 0.0;
      EXPECT_NEAR(grads[0][t * kNumTags + k], m[t * kNumTags + k] - indicator, 1e-12);
    }
  }
}

TEST(Crf, BatchNllGradCheck) {
  const std::vector<std::size_t> lengths = {4, 2, 3};
  const std::vector<std::size_t> gold = {0, 1, 4, 2, 4, 4, 0, 0, 2, 3, 3, 4};
  for (bool constrained : {false, true}) {
    const auto crf = random_crf(71, constrained);
    const auto f = [&](num::Tape& tape, std::span<const num::Var> p) {
      return batch_loss(tape, p, crf.constraints, lengths, gold);
    };
    const auto report = num::grad_check(
        f, {random_tensor({3, 4, kNumTags}, 72), crf.transitions, crf.start, crf.end});
    EXPECT_LE(report.max_relative_error, 1e-6) << "constrained " << constrained;
  }
}

TEST(Crf, ForbiddenEntriesGetNoGradient) {
  const auto crf = random_crf(81, true);
  const std::vector<std::size_t> lengths = {3};
  const std::vector<std::size_t> gold = {0, 1, 4};
  num::Tape tape;
  const Tensor e = random_tensor({1, 3, kNumTags}, 82);
  num::Var tv = tape.parameter(crf.transitions), sv = tape.parameter(crf.start);
  const auto g = tape.backward(
      batch_nll(tape.constant(e), tv, sv, tape.constant(crf.end), crf.constraints, lengths, gold));
  for (std::size_t from = 0; from < kNumTags; ++from) {
    for (std::size_t to = 0; to < kNumTags; ++to) {
      if (!crf.constraints.allowed(from, to)) {
        EXPECT_EQ(g[0][from * kNumTags + to], 0.0);
      }
    }
    if (!crf.constraints.start_allowed[from]) {
      EXPECT_EQ(g[1][from], 0.0);
    }
  }
}

}  // namespace
}  // namespace mder::crf
