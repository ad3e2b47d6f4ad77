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

#include "mder/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "mder/error.hpp"
#include "mder/fused_ops.hpp"
#include "mder/ops.hpp"

namespace mder::model {

using num::Shape;
using num::Tensor;
using num::Var;

namespace {

// Additive score for masked attention keys; exp() of it is exactly zero.
constexpr double kMaskedScore = -1e30;

template <typename Params, typename Fn>
void visit(Params& p, Fn&& fn) {
  fn("char_embedding", p.char_embedding);
  if (!p.rule_embedding.empty()) fn("rule_embedding", p.rule_embedding);
  for (std::size_t l = 0; l < p.lstm.size(); ++l) {
    for (std::size_t d = 0; d < 2; ++d) {
      const std::string prefix =
          "lstm." + std::to_string(l) + (d == 0 ? ".forward." : ".backward.");
      fn(prefix + "input_weight", p.lstm[l][d].input_weight);
      fn(prefix + "recurrent_weight", p.lstm[l][d].recurrent_weight);
      fn(prefix + "bias", p.lstm[l][d].bias);
    }
  }
  if (!p.cnn_weight.empty()) {
    fn("cnn.weight", p.cnn_weight);
    fn("cnn.bias", p.cnn_bias);
  }
  fn("attention", p.attention);
  fn("projection", p.projection);
  fn("projection_bias", p.projection_bias);
  fn("crf.transitions", p.crf_transitions);
  fn("crf.start", p.crf_start);
  fn("crf.end", p.crf_end);
}

Tensor uniform(Shape shape, double limit, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

Tensor glorot(std::size_t fan_in, std::size_t fan_out, std::mt19937_64& rng) {
  return uniform({fan_in, fan_out},
                 std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)), rng);
}

}  // namespace

void MderConfig::validate() const {
  if (char_emb_dim == 0 || lstm_hidden == 0 || lstm_layers == 0 ||
      attn_out == 0 || max_len == 0 || (use_rule && rule_emb_dim == 0) ||
      (use_cnn && (cnn_filters == 0 || feature_stride == 0))) {
    throw ValidationError("model config has a zero dimension");
  }
  if (n_tags != corpus::kNumTags) {
    throw ValidationError("model config: n_tags must be 5");
  }
}

MderConfig MderConfig::baseline() {
  MderConfig c;
  c.use_rule = false;
  c.use_cnn = false;
  return c;
}

MderConfig MderConfig::debug_small() {
  MderConfig c;
  c.char_emb_dim = 25;
  c.rule_emb_dim = 5;
  c.lstm_hidden = 30;
  c.cnn_filters = 4;
  c.attn_out = 60;
  return c;
}

nlohmann::json MderConfig::to_json() const {
  return {{"char_emb_dim", char_emb_dim},   {"rule_emb_dim", rule_emb_dim},
          {"lstm_hidden", lstm_hidden},     {"lstm_layers", lstm_layers},
          {"cnn_filters", cnn_filters},     {"feature_stride", feature_stride},
          {"attn_in", attn_in()},           {"attn_out", attn_out},
          {"n_tags", n_tags},               {"max_len", max_len},
          {"use_rule", use_rule},           {"use_cnn", use_cnn}};
}

MderConfig MderConfig::from_json(const nlohmann::json& j) {
  MderConfig c;
  try {
    c.char_emb_dim = j.at("char_emb_dim").get<std::size_t>();
    c.rule_emb_dim = j.at("rule_emb_dim").get<std::size_t>();
    c.lstm_hidden = j.at("lstm_hidden").get<std::size_t>();
    c.lstm_layers = j.at("lstm_layers").get<std::size_t>();
    c.cnn_filters = j.at("cnn_filters").get<std::size_t>();
    c.feature_stride = j.at("feature_stride").get<std::size_t>();
    c.attn_out = j.at("attn_out").get<std::size_t>();
    c.n_tags = j.at("n_tags").get<std::size_t>();
    c.max_len = j.at("max_len").get<std::size_t>();
    c.use_rule = j.at("use_rule").get<bool>();
    c.use_cnn = j.at("use_cnn").get<bool>();
    if (j.contains("attn_in") && j.at("attn_in").get<std::size_t>() != c.attn_in()) {
      throw ValidationError("model config: attn_in inconsistent with branch widths");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model config: ") + e.what());
  }
  c.validate();
  return c;
}

std::vector<std::pair<std::string, Tensor*>> MderParams::named() {
  std::vector<std::pair<std::string, Tensor*>> out;
  visit(*this, [&](const std::string& name, Tensor& t) { out.emplace_back(name, &t); });
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> MderParams::named() const {
  std::vector<std::pair<std::string, const Tensor*>> out;
  visit(*this, [&](const std::string& name, const Tensor& t) {
    out.emplace_back(name, &t);
  });
  return out;
}

crf::CrfParams MderParams::crf() const {
  crf::CrfParams c;
  c.transitions = crf_transitions;
  c.start = crf_start;
  c.end = crf_end;
  c.constraints = crf::Constraints::bio();
  return c;
}

std::vector<std::pair<std::string, Shape>> expected_shapes(const MderConfig& config,
                                                           std::size_t vocab_size) {
  MderParams shapes = init_params(config, std::max<std::size_t>(vocab_size, 1), 0);
  std::vector<std::pair<std::string, Shape>> out;
  for (auto& [name, t] : shapes.named()) out.emplace_back(name, t->shape());
  return out;
}

MderParams init_params(const MderConfig& config, std::size_t vocab_size,
                       std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  MderParams p;
  const std::size_t h = config.lstm_hidden;
  p.char_embedding = uniform({vocab_size, config.char_emb_dim}, 0.05, rng);
  if (config.use_rule) {
    p.rule_embedding = uniform({lexicon::kNumRuleTags, config.rule_emb_dim}, 0.05, rng);
  }
  std::size_t in = config.input_width();
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    std::array<LstmDirection, 2> layer;
    for (auto& dir : layer) {
      dir.input_weight = glorot(in, 4 * h, rng);
      dir.recurrent_weight = glorot(h, 4 * h, rng);
      dir.bias = Tensor({4 * h}, 0.0);
      for (std::size_t j = h; j < 2 * h; ++j) dir.bias[j] = 1.0;
    }
    p.lstm.push_back(std::move(layer));
    in = 2 * h;
  }
  if (config.use_cnn) {
    // Each filter is a 1x1 kernel: fan-in and fan-out of one.
    p.cnn_weight = uniform({config.cnn_filters}, std::sqrt(3.0), rng);
    p.cnn_bias = Tensor({config.cnn_filters}, 0.0);
  }
  p.attention = glorot(config.attn_in(), config.attn_out, rng);
  p.projection = glorot(config.attn_out, config.n_tags, rng);
  p.projection_bias = Tensor({config.n_tags}, 0.0);
  p.crf_transitions = Tensor({config.n_tags, config.n_tags}, 0.0);
  p.crf_start = Tensor({config.n_tags}, 0.0);
  p.crf_end = Tensor({config.n_tags}, 0.0);
  return p;
}

void Batch::validate() const {
  const std::size_t n = batch_size * steps;
  if (batch_size == 0 || steps == 0 || char_ids.size() != n ||
      rule_ids.size() != n || mask.size() != n || lengths.size() != batch_size ||
      (!gold.empty() && gold.size() != n)) {
    throw ShapeError("batch: inconsistent shapes");
  }
  for (std::size_t b = 0; b < batch_size; ++b) {
    for (std::size_t t = 0; t < steps; ++t) {
      if ((mask[b * steps + t] != 0) != (t < lengths[b])) {
        throw ShapeError("batch: mask is not a prefix of ones");
      }
    }
  }
}

namespace {

Batch build(std::size_t count,
            const std::function<std::u32string_view(std::size_t)>& text,
            const std::function<const std::vector<corpus::Tag>*(std::size_t)>& tags,
            const corpus::Vocabulary& vocab, const lexicon::Lexicon& lexicon,
            std::size_t max_len) {
  if (count == 0) throw ValidationError("batch: no sentences");
  Batch b;
  b.batch_size = count;
  for (std::size_t i = 0; i < count; ++i) {
    b.steps = std::max(b.steps, std::min(text(i).size(), max_len));
  }
  b.steps = std::max<std::size_t>(b.steps, 1);
  const std::size_t n = count * b.steps;
  b.char_ids.assign(n, corpus::Vocabulary::kPad);
  b.rule_ids.assign(n, static_cast<std::size_t>(lexicon::RuleTag::UNK));
  b.mask.assign(n, 0);
  const bool labeled = tags(0) != nullptr;
  if (labeled) b.gold.assign(n, corpus::tag_index(corpus::Tag::O));
  for (std::size_t i = 0; i < count; ++i) {
    const std::u32string_view chars = text(i).substr(0, max_len);
    const auto rules = lexicon::rule_tags(chars, lexicon);
    b.lengths.push_back(chars.size());
    for (std::size_t t = 0; t < chars.size(); ++t) {
      const std::size_t k = i * b.steps + t;
      b.char_ids[k] = vocab.index(chars[t]);
      b.rule_ids[k] = static_cast<std::size_t>(rules[t]);
      b.mask[k] = 1;
      if (labeled) b.gold[k] = corpus::tag_index((*tags(i))[t]);
    }
  }
  return b;
}

}  // namespace

Batch make_batch(std::span<const std::u32string_view> texts,
                 const corpus::Vocabulary& vocab, const lexicon::Lexicon& lexicon,
                 std::size_t max_len) {
  return build(
      texts.size(), [&](std::size_t i) { return texts[i]; },
      [](std::size_t) -> const std::vector<corpus::Tag>* { return nullptr; }, vocab,
      lexicon, max_len);
}

Batch make_batch(std::span<const corpus::LabeledSentence* const> sentences,
                 const corpus::Vocabulary& vocab, const lexicon::Lexicon& lexicon,
                 std::size_t max_len) {
  return build(
      sentences.size(),
      [&](std::size_t i) { return std::u32string_view(sentences[i]->chars); },
      [&](std::size_t i) { return &sentences[i]->tags; }, vocab, lexicon, max_len);
}

ParamVars bind(num::Tape& tape, const MderParams& params, bool trainable) {
  const auto leaf = [&](const Tensor& t) {
    return trainable ? tape.parameter(t) : tape.input(t);
  };
  ParamVars v;
  v.char_embedding = leaf(params.char_embedding);
  if (!params.rule_embedding.empty()) v.rule_embedding = leaf(params.rule_embedding);
  for (const auto& layer : params.lstm) {
    std::array<ParamVars::Direction, 2> dirs;
    for (std::size_t d = 0; d < 2; ++d) {
      dirs[d].input_weight = leaf(layer[d].input_weight);
      dirs[d].recurrent_weight = leaf(layer[d].recurrent_weight);
      dirs[d].bias = leaf(layer[d].bias);
    }
    v.lstm.push_back(dirs);
  }
  if (!params.cnn_weight.empty()) {
    v.cnn_weight = leaf(params.cnn_weight);
    v.cnn_bias = leaf(params.cnn_bias);
  }
  v.attention = leaf(params.attention);
  v.projection = leaf(params.projection);
  v.projection_bias = leaf(params.projection_bias);
  v.crf_transitions = leaf(params.crf_transitions);
  v.crf_start = leaf(params.crf_start);
  v.crf_end = leaf(params.crf_end);
  return v;
}

ParamVars bind(std::span<const Var> vars, const MderConfig& config) {
  std::size_t next = 0;
  const auto take = [&] {
    if (next >= vars.size()) throw ShapeError("bind: too few parameter handles");
    return vars[next++];
  };
  ParamVars v;
  v.char_embedding = take();
  if (config.use_rule) v.rule_embedding = take();
  for (std::size_t l = 0; l < config.lstm_layers; ++l) {
    std::array<ParamVars::Direction, 2> dirs;
    for (auto& d : dirs) {
      d.input_weight = take();
      d.recurrent_weight = take();
      d.bias = take();
    }
    v.lstm.push_back(dirs);
  }
  if (config.use_cnn) {
    v.cnn_weight = take();
    v.cnn_bias = take();
  }
  v.attention = take();
  v.projection = take();
  v.projection_bias = take();
  v.crf_transitions = take();
  v.crf_start = take();
  v.crf_end = take();
  if (next != vars.size()) throw ShapeError("bind: too many parameter handles");
  return v;
}

Var cnn_branch(Var x, Var weight, Var bias, std::size_t stride) {
  const Shape s = x.shape();
  if (s.size() != 3) throw ShapeError("cnn_branch: expected (B, T, W) input");
  Var rows = num::reshape(x, {s[0] * s[1], s[2]});
  Var pooled = num::strided_conv_relu_max(rows, weight, bias, stride);
  return num::reshape(pooled, {s[0], s[1], weight.dim(0)});
}

Var bilstm(Var x, std::span<const std::array<ParamVars::Direction, 2>> layers,
           std::span<const std::uint8_t> mask) {
  Var h = x;
  for (const auto& layer : layers) {
    if (h.shape().size() != 3 || h.dim(2) != layer[0].input_weight.dim(0)) {
      throw ShapeError("bilstm: input width " + num::shape_string(h.shape()) +
                       " does not match layer weights " +
                       num::shape_string(layer[0].input_weight.shape()));
    }
    std::array<Var, 2> outs;
    for (std::size_t d = 0; d < 2; ++d) {
      Var gates = num::add(num::matmul(h, layer[d].input_weight), layer[d].bias);
      outs[d] = num::lstm_recurrence(gates, layer[d].recurrent_weight, mask, d == 1);
    }
    h = num::concat(outs, 2);
  }
  return h;
}

Var attention(Var h, Var weight, std::span<const std::uint8_t> mask) {
  const Shape& s = h.shape();
  if (s.size() != 3 || s[2] != weight.dim(0)) {
    throw ShapeError("attention: input " + num::shape_string(s) + " vs W " +
                     num::shape_string(weight.shape()));
  }
  const std::size_t batch = s[0], steps = s[1];
  if (mask.size() != batch * steps) throw ShapeError("attention: mask size");
  Tensor key_bias({batch, steps, steps}, 0.0);
  for (std::size_t b = 0; b < batch; ++b) {
    bool any = false;
    for (std::size_t k = 0; k < steps; ++k) {
      if (mask[b * steps + k]) {
        any = true;
        continue;
      }
      for (std::size_t q = 0; q < steps; ++q) key_bias[(b * steps + q) * steps + k] = kMaskedScore;
    }
    if (!any) throw ValidationError("attention: all positions masked");
  }
  Var u = num::tanh(num::matmul(h, weight));
  const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(weight.dim(1)));
  Var scores = num::scale(num::bmm(u, u, true), inv_sqrt);
  scores = num::add(scores, h.tape()->constant(std::move(key_bias)));
  Var weights = num::softmax(scores);
  return num::bmm(weights, u, false);
}

Var forward(const ParamVars& params, const Batch& batch, const MderConfig& config) {
  batch.validate();
  Var emb = num::gather(params.char_embedding, batch.char_ids);
  if (config.use_rule) {
    std::array<Var, 2> parts{emb, num::gather(params.rule_embedding, batch.rule_ids)};
    emb = num::concat(parts, 1);
  }
  if (emb.dim(1) != config.input_width()) throw ShapeError("forward: embedding width");
  emb = num::reshape(emb, {batch.batch_size, batch.steps, config.input_width()});

  Var features = bilstm(emb, params.lstm, batch.mask);
  if (config.use_cnn) {
    std::array<Var, 2> parts{
        features, cnn_branch(emb, params.cnn_weight, params.cnn_bias, config.feature_stride)};
    features = num::concat(parts, 2);
  }
  if (features.dim(2) != config.attn_in()) throw ShapeError("forward: attention input width");
  Var context = attention(features, params.attention, batch.mask);
  return num::add(num::matmul(context, params.projection), params.projection_bias);
}

Var loss(const ParamVars& params, const Batch& batch, const MderConfig& config) {
  if (batch.gold.empty()) throw ValidationError("loss: batch has no gold tags");
  Var emissions = forward(params, batch, config);
  return crf::batch_nll(emissions, params.crf_transitions, params.crf_start,
                        params.crf_end, crf::Constraints::bio(), batch.lengths,
                        batch.gold);
}

std::vector<std::vector<corpus::Tag>> decode(const MderParams& params,
                                             const Batch& batch,
                                             const MderConfig& config) {
  num::Tape tape;
  const ParamVars vars = bind(tape, params, false);
  const Var emissions = forward(vars, batch, config);
  const crf::CrfParams crf = params.crf();
  std::vector<std::vector<corpus::Tag>> out;
  out.reserve(batch.batch_size);
  for (std::size_t b = 0; b < batch.batch_size; ++b) {
    const std::size_t len = batch.lengths[b];
    std::vector<double> rows(
        emissions.value().ptr() + b * batch.steps * config.n_tags,
        emissions.value().ptr() + (b * batch.steps + len) * config.n_tags);
    const auto path = crf::viterbi(Tensor({len, config.n_tags}, std::move(rows)), crf);
    std::vector<corpus::Tag> tags;
    for (std::size_t t : path.tags) tags.push_back(corpus::tag_from_index(t));
    out.push_back(std::move(tags));
  }
  return out;
}

}  // namespace mder::model
