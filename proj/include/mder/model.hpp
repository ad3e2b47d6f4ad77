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
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "mder/corpus.hpp"
#include "mder/crf.hpp"
#include "mder/lexicon.hpp"
#include "mder/tape.hpp"
#include "mder/tensor.hpp"

namespace mder::model {

// Architecture hyperparameters. Defaults are the full tagger:
// 200 (+40) -> BiLSTM 480 (+) CNN 30 -> 510 -> attention 480 -> 5 tags.
struct MderConfig {
  std::size_t char_emb_dim = 200;
  std::size_t rule_emb_dim = 40;
  std::size_t lstm_hidden = 240;  // per direction
  std::size_t lstm_layers = 2;
  std::size_t cnn_filters = 30;
  std::size_t feature_stride = 2;
  std::size_t attn_out = 480;
  std::size_t n_tags = corpus::kNumTags;
  std::size_t max_len = corpus::kDefaultMaxLen;
  bool use_rule = true;
  bool use_cnn = true;

  std::size_t input_width() const {
    return char_emb_dim + (use_rule ? rule_emb_dim : 0);
  }
  std::size_t attn_in() const {
    return 2 * lstm_hidden + (use_cnn ? cnn_filters : 0);
  }
  // Throws ValidationError on zero dimensions or n_tags != 5.
  void validate() const;

  static MderConfig full() { return {}; }
  // BiLSTM + attention + CRF: no rule embedding, no CNN branch.
  static MderConfig baseline();
  // Every width divided by 8, for fast CI runs.
  static MderConfig debug_small();

  nlohmann::json to_json() const;
  static MderConfig from_json(const nlohmann::json& j);

  friend bool operator==(const MderConfig&, const MderConfig&) = default;
};

struct LstmDirection {
  num::Tensor input_weight;      // (in, 4H), gates i f g o
  num::Tensor recurrent_weight;  // (H, 4H)
  num::Tensor bias;              // (4H)

  friend bool operator==(const LstmDirection&, const LstmDirection&) = default;
};

struct MderParams {
  num::Tensor char_embedding;  // (|vocab|, char_emb_dim)
  num::Tensor rule_embedding;  // (6, rule_emb_dim); only with use_rule
  std::vector<std::array<LstmDirection, 2>> lstm;  // [layer][forward, backward]
  num::Tensor cnn_weight;  // (filters); only with use_cnn
  num::Tensor cnn_bias;    // (filters)
  num::Tensor attention;   // (attn_in, attn_out)
  num::Tensor projection;  // (attn_out, 5)
  num::Tensor projection_bias;
  num::Tensor crf_transitions;  // (5, 5)
  num::Tensor crf_start;
  num::Tensor crf_end;

  // Every present tensor with a stable name, in a fixed order shared by
  // checkpoints, the optimizer and gradient lists.
  std::vector<std::pair<std::string, num::Tensor*>> named();
  std::vector<std::pair<std::string, const num::Tensor*>> named() const;

  crf::CrfParams crf() const;

  friend bool operator==(const MderParams&, const MderParams&) = default;
};

// Names and shapes init_params() produces for this config.
std::vector<std::pair<std::string, num::Shape>> expected_shapes(
    const MderConfig& config, std::size_t vocab_size);

// Glorot-uniform matrices, U(+-0.05) embeddings, zero biases except the
// LSTM forget gate (1.0), zero CRF scores.
MderParams init_params(const MderConfig& config, std::size_t vocab_size,
                       std::uint64_t seed);

// Padded batch, row-major (B, T). Masks are 1s followed by 0s.
struct Batch {
  std::size_t batch_size = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> char_ids;
  std::vector<std::size_t> rule_ids;
  std::vector<std::uint8_t> mask;
  std::vector<std::size_t> lengths;
  std::vector<std::size_t> gold;  // empty when unlabeled

  void validate() const;
};

// Pads to the longest member (capped at max_len); rule ids come from the
// lexicon.
Batch make_batch(std::span<const std::u32string_view> texts,
                 const corpus::Vocabulary& vocab, const lexicon::Lexicon& lexicon,
                 std::size_t max_len);
Batch make_batch(std::span<const corpus::LabeledSentence* const> sentences,
                 const corpus::Vocabulary& vocab, const lexicon::Lexicon& lexicon,
                 std::size_t max_len);

// Tape handles for every parameter.
struct ParamVars {
  num::Var char_embedding;
  num::Var rule_embedding;
  struct Direction {
    num::Var input_weight, recurrent_weight, bias;
  };
  std::vector<std::array<Direction, 2>> lstm;
  num::Var cnn_weight, cnn_bias;
  num::Var attention;
  num::Var projection, projection_bias;
  num::Var crf_transitions, crf_start, crf_end;
};

// Registers every tensor as a gradient-tracked parameter (in named() order)
// or, with trainable = false, as a read-only input.
ParamVars bind(num::Tape& tape, const MderParams& params, bool trainable);
// Handles already on a tape, one per tensor in named() order.
ParamVars bind(std::span<const num::Var> vars, const MderConfig& config);

// (B, T, W) -> (B, T, filters)
num::Var cnn_branch(num::Var x, num::Var weight, num::Var bias,
                    std::size_t stride);
// (B, T, in) -> (B, T, 2H); layers[l] = {forward, backward}.
num::Var bilstm(num::Var x, std::span<const std::array<ParamVars::Direction, 2>> layers,
                std::span<const std::uint8_t> mask);
// (B, T, attn_in) -> (B, T, attn_out): u = tanh(hW), scaled dot-product
// self-attention of u over the unmasked positions.
num::Var attention(num::Var h, num::Var weight, std::span<const std::uint8_t> mask);

// Emissions (B, T, 5).
num::Var forward(const ParamVars& params, const Batch& batch,
                 const MderConfig& config);

// Mean CRF negative log-likelihood over the batch (needs gold tags).
num::Var loss(const ParamVars& params, const Batch& batch,
              const MderConfig& config);

// Viterbi tags per batch member, truncated to its length.
std::vector<std::vector<corpus::Tag>> decode(const MderParams& params,
                                             const Batch& batch,
                                             const MderConfig& config);

}  // namespace mder::model
