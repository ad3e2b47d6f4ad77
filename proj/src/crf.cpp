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

#include "mder/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mder/error.hpp"

namespace mder::crf {

namespace {

constexpr std::size_t K = kNumTags;
enum : std::size_t { BM = 0, IM = 1, BD = 2, ID = 3, O = 4 };

double log_sum_exp(const double* x, std::size_t n) {
  double mx = x[0];
  for (std::size_t i = 1; i < n; ++i) mx = std::max(mx, x[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) z += std::exp(x[i] - mx);
  return mx + std::log(z);
}

// Effective scores as plain arrays, shared by the scalar routines and the
// batched tape op.
struct Scores {
  std::array<double, K * K> trans;
  std::array<double, K> start;
  std::array<double, K> end;

  Scores(const double* t, const double* s, const double* e, const Constraints& c) {
    for (std::size_t i = 0; i < K * K; ++i) {
      trans[i] = c.transition_allowed[i] ? t[i] : kForbidden;
    }
    for (std::size_t i = 0; i < K; ++i) {
      start[i] = c.start_allowed[i] ? s[i] : kForbidden;
      end[i] = e[i];
    }
  }
  explicit Scores(const CrfParams& p)
      : Scores(p.transitions.ptr(), p.start.ptr(), p.end.ptr(), p.constraints) {}
};

std::size_t check_emissions(const num::Tensor& em) {
  if (em.rank() != 2 || em.dim(1) != K) {
    throw ShapeError("crf: emissions must be (T, 5), got " +
                     num::shape_string(em.shape()));
  }
  return em.dim(0);
}

// alpha[t*K + j] = log sum over prefixes ending in j at t.
void forward(const double* em, std::size_t steps, const Scores& s,
             std::vector<double>& alpha) {
  alpha.assign(steps * K, 0.0);
  for (std::size_t j = 0; j < K; ++j) alpha[j] = s.start[j] + em[j];
  double buf[K];
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      for (std::size_t i = 0; i < K; ++i) {
        buf[i] = alpha[(t - 1) * K + i] + s.trans[i * K + j];
      }
      alpha[t * K + j] = log_sum_exp(buf, K) + em[t * K + j];
    }
  }
}

// beta[t*K + i] = log sum over suffixes after t given tag i at t.
void backward(const double* em, std::size_t steps, const Scores& s,
              std::vector<double>& beta) {
  beta.assign(steps * K, 0.0);
  for (std::size_t i = 0; i < K; ++i) beta[(steps - 1) * K + i] = s.end[i];
  double buf[K];
  for (std::size_t t = steps - 1; t-- > 0;) {
    for (std::size_t i = 0; i < K; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        buf[j] = s.trans[i * K + j] + em[(t + 1) * K + j] + beta[(t + 1) * K + j];
      }
      beta[t * K + i] = log_sum_exp(buf, K);
    }
  }
}

double log_z(const std::vector<double>& alpha, std::size_t steps, const Scores& s) {
  double buf[K];
  for (std::size_t j = 0; j < K; ++j) buf[j] = alpha[(steps - 1) * K + j] + s.end[j];
  return log_sum_exp(buf, K);
}

double score_path(const double* em, std::span<const std::size_t> tags,
                  const Scores& s) {
  for (std::size_t tag : tags) {
    if (tag >= K) throw ValidationError("crf: tag index " + std::to_string(tag) + " out of range");
  }
  double total = s.start[tags[0]];
  for (std::size_t t = 0; t < tags.size(); ++t) {
    total += em[t * K + tags[t]];
    if (t + 1 < tags.size()) total += s.trans[tags[t] * K + tags[t + 1]];
  }
  return total + s.end[tags.back()];
}

}  // namespace

Constraints Constraints::none() {
  Constraints c;
  c.transition_allowed.fill(true);
  c.start_allowed.fill(true);
  return c;
}

Constraints Constraints::bio() {
  Constraints c = none();
  for (std::size_t from = 0; from < K; ++from) {
    c.transition_allowed[from * K + IM] = from == BM || from == IM;
    c.transition_allowed[from * K + ID] = from == BD || from == ID;
  }
  c.start_allowed[IM] = false;
  c.start_allowed[ID] = false;
  return c;
}

double CrfParams::transition(std::size_t from, std::size_t to) const {
  return constraints.allowed(from, to) ? transitions[from * K + to] : kForbidden;
}

double CrfParams::start_score(std::size_t tag) const {
  return constraints.start_allowed[tag] ? start[tag] : kForbidden;
}

double path_score(const num::Tensor& emissions, std::span<const std::size_t> tags,
                  const CrfParams& crf) {
  const std::size_t steps = check_emissions(emissions);
  if (tags.size() != steps) throw ValidationError("crf: tag count does not match emissions");
  return score_path(emissions.ptr(), tags, Scores(crf));
}

double log_partition(const num::Tensor& emissions, const CrfParams& crf) {
  const std::size_t steps = check_emissions(emissions);
  const Scores s(crf);
  std::vector<double> alpha;
  forward(emissions.ptr(), steps, s, alpha);
  return log_z(alpha, steps, s);
}

double nll(const num::Tensor& emissions, std::span<const std::size_t> gold,
           const CrfParams& crf) {
  return log_partition(emissions, crf) - path_score(emissions, gold, crf);
}

num::Tensor marginals(const num::Tensor& emissions, const CrfParams& crf) {
  const std::size_t steps = check_emissions(emissions);
  const Scores s(crf);
  std::vector<double> alpha, beta;
  forward(emissions.ptr(), steps, s, alpha);
  backward(emissions.ptr(), steps, s, beta);
  const double lz = log_z(alpha, steps, s);
  num::Tensor out({steps, K});
  for (std::size_t i = 0; i < steps * K; ++i) out[i] = std::exp(alpha[i] + beta[i] - lz);
  return out;
}

ViterbiResult viterbi(const num::Tensor& emissions, const CrfParams& crf) {
  const std::size_t steps = check_emissions(emissions);
  const Scores s(crf);
  const double* em = emissions.ptr();
  std::vector<double> best(steps * K);
  std::vector<std::size_t> back(steps * K, 0);
  for (std::size_t j = 0; j < K; ++j) best[j] = s.start[j] + em[j];
  for (std::size_t t = 1; t < steps; ++t) {
    for (std::size_t j = 0; j < K; ++j) {
      std::size_t arg = 0;
      double top = best[(t - 1) * K] + s.trans[j];
      for (std::size_t i = 1; i < K; ++i) {
        const double v = best[(t - 1) * K + i] + s.trans[i * K + j];
        if (v > top) {
          top = v;
          arg = i;
        }
      }
      best[t * K + j] = top + em[t * K + j];
      back[t * K + j] = arg;
    }
  }
  std::size_t last = 0;
  double top = best[(steps - 1) * K] + s.end[0];
  for (std::size_t j = 1; j < K; ++j) {
    const double v = best[(steps - 1) * K + j] + s.end[j];
    if (v > top) {
      top = v;
      last = j;
    }
  }
  ViterbiResult out;
  out.tags.assign(steps, 0);
  out.tags[steps - 1] = last;
  for (std::size_t t = steps - 1; t > 0; --t) out.tags[t - 1] = back[t * K + out.tags[t]];
  out.score = score_path(em, out.tags, s);
  return out;
}

num::Var batch_nll(num::Var emissions, num::Var transitions, num::Var start,
                   num::Var end, const Constraints& constraints,
                   std::span<const std::size_t> lengths,
                   std::span<const std::size_t> gold) {
  const num::Shape& es = emissions.shape();
  if (es.size() != 3 || es[2] != K || transitions.shape() != num::Shape{K, K} ||
      start.shape() != num::Shape{K} || end.shape() != num::Shape{K}) {
    throw ShapeError("batch_nll: unexpected shapes");
  }
  const std::size_t batch = es[0], steps = es[1];
  if (lengths.size() != batch || gold.size() != batch * steps) {
    throw ShapeError("batch_nll: lengths/gold do not match the batch");
  }
  for (std::size_t b = 0; b < batch; ++b) {
    if (lengths[b] == 0 || lengths[b] > steps) {
      throw ShapeError("batch_nll: sentence length out of range");
    }
  }

  const Scores s(transitions.value().ptr(), start.value().ptr(),
                 end.value().ptr(), constraints);
  double total = 0.0;
  std::vector<double> alpha;
  for (std::size_t b = 0; b < batch; ++b) {
    const double* em = emissions.value().ptr() + b * steps * K;
    forward(em, lengths[b], s, alpha);
    total += log_z(alpha, lengths[b], s) -
             score_path(em, gold.subspan(b * steps, lengths[b]), s);
  }

  std::vector<std::size_t> saved_len(lengths.begin(), lengths.end());
  std::vector<std::size_t> saved_gold(gold.begin(), gold.end());
  const std::size_t ei = emissions.id(), ti = transitions.id(),
                    si = start.id(), ni = end.id();
  return emissions.tape()->record(
      "crf_nll", num::Tensor::scalar(total / static_cast<double>(batch)),
      {emissions, transitions, start, end},
      [=, saved_len = std::move(saved_len),
       saved_gold = std::move(saved_gold)](num::Tape& tape, std::size_t self) {
        const double g = tape.grad(self)[0] / static_cast<double>(batch);
        const Scores sc(tape.value(ti).ptr(), tape.value(si).ptr(),
                        tape.value(ni).ptr(), constraints);
        std::array<double, K * K> dtrans{};
        std::array<double, K> dstart{}, dend{};
        std::vector<double> alpha, beta;
        const bool need_em = tape.requires_grad(ei);
        for (std::size_t b = 0; b < batch; ++b) {
          const std::size_t len = saved_len[b];
          const double* em = tape.value(ei).ptr() + b * steps * K;
          const std::size_t* gb = saved_gold.data() + b * steps;
          forward(em, len, sc, alpha);
          backward(em, len, sc, beta);
          const double lz = log_z(alpha, len, sc);
          for (std::size_t t = 0; t < len; ++t) {
            for (std::size_t j = 0; j < K; ++j) {
              const double p = std::exp(alpha[t * K + j] + beta[t * K + j] - lz);
              const double d = p - (gb[t] == j ? 1.0 : 0.0);
              if (need_em) tape.grad(ei)[b * steps * K + t * K + j] += g * d;
              if (t == 0) dstart[j] += d;
              if (t == len - 1) dend[j] += d;
            }
          }
          for (std::size_t t = 0; t + 1 < len; ++t) {
            for (std::size_t i = 0; i < K; ++i) {
              for (std::size_t j = 0; j < K; ++j) {
                dtrans[i * K + j] += std::exp(alpha[t * K + i] + sc.trans[i * K + j] +
                                              em[(t + 1) * K + j] +
                                              beta[(t + 1) * K + j] - lz);
              }
            }
            dtrans[gb[t] * K + gb[t + 1]] -= 1.0;
          }
        }
        if (tape.requires_grad(ti)) {
          num::Tensor& gt = tape.grad(ti);
          for (std::size_t i = 0; i < K * K; ++i) {
            if (constraints.transition_allowed[i]) gt[i] += g * dtrans[i];
          }
        }
        if (tape.requires_grad(si)) {
          num::Tensor& gs = tape.grad(si);
          for (std::size_t j = 0; j < K; ++j) {
            if (constraints.start_allowed[j]) gs[j] += g * dstart[j];
          }
        }
        if (tape.requires_grad(ni)) {
          num::Tensor& gn = tape.grad(ni);
          for (std::size_t j = 0; j < K; ++j) gn[j] += g * dend[j];
        }
      });
}

}  // namespace mder::crf
