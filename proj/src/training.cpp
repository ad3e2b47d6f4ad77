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

#include "mder/training.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <numeric>
#include <random>
#include <thread>

#include "mder/error.hpp"

namespace mder::train {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ValidationError("batch_size must be >= 1");
  if (patience == 0) throw ValidationError("patience must be >= 1");
  if (max_epochs == 0) throw ValidationError("max_epochs must be >= 1");
  if (!(learning_rate > 0.0) || !(clip_norm > 0.0)) {
    throw ValidationError("learning_rate and clip_norm must be positive");
  }
}

Adam::Adam(std::vector<num::Tensor*> params, const TrainConfig& config)
    : params_(std::move(params)), config_(config) {
  for (const num::Tensor* p : params_) {
    m_.emplace_back(p->shape(), 0.0);
    v_.emplace_back(p->shape(), 0.0);
  }
}

double Adam::step(std::vector<num::Tensor>& grads) {
  if (grads.size() != params_.size()) throw ShapeError("adam: gradient count mismatch");
  double sq = 0.0;
  for (const auto& g : grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double norm = std::sqrt(sq);
  const double clip = norm > config_.clip_norm ? config_.clip_norm / norm : 1.0;
  ++t_;
  const double b1 = config_.beta1, b2 = config_.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params_.size(); ++k) {
    num::Tensor& p = *params_[k];
    num::Tensor& m = m_[k];
    num::Tensor& v = v_[k];
    const num::Tensor& g = grads[k];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = b1 * m[i] + (1.0 - b1) * gi;
      v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
      p[i] -= config_.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.epsilon);
    }
  }
  return norm;
}

namespace {

Metrics evaluate_range(const model::Tagger& tagger,
                       std::span<const corpus::LabeledSentence> dataset,
                       std::size_t batch_size) {
  MetricsAccumulator acc;
  for (std::size_t start = 0; start < dataset.size(); start += batch_size) {
    const std::size_t stop = std::min(dataset.size(), start + batch_size);
    std::vector<std::u32string> texts;
    for (std::size_t i = start; i < stop; ++i) texts.push_back(dataset[i].chars);
    const auto predicted = tagger.predict(texts, batch_size);
    for (std::size_t i = start; i < stop; ++i) {
      const auto& gold = dataset[i].tags;
      const auto& pred = predicted[i - start];
      acc.add(std::span(gold).first(pred.size()), pred);
    }
  }
  return acc.result();
}

}  // namespace

Metrics evaluate(const model::Tagger& tagger,
                 std::span<const corpus::LabeledSentence> dataset,
                 std::size_t threads, std::size_t batch_size) {
  if (dataset.empty()) throw ValidationError("evaluate: empty dataset");
  threads = std::clamp<std::size_t>(threads, 1, dataset.size());
  if (threads == 1) return evaluate_range(tagger, dataset, batch_size);

  std::vector<Metrics> parts(threads);
  std::vector<std::thread> workers;
  const std::size_t chunk = (dataset.size() + threads - 1) / threads;
  for (std::size_t w = 0; w < threads; ++w) {
    const std::size_t lo = std::min(dataset.size(), w * chunk);
    const std::size_t hi = std::min(dataset.size(), lo + chunk);
    workers.emplace_back([&, w, lo, hi] {
      if (lo < hi) parts[w] = evaluate_range(tagger, dataset.subspan(lo, hi - lo), batch_size);
    });
  }
  for (auto& t : workers) t.join();
  Counts method, dataset_counts, chars;
  for (const auto& m : parts) {
    method += m.method;
    dataset_counts += m.dataset;
    chars += m.characters;
  }
  return Metrics::from_counts(method, dataset_counts, chars);
}

TrainResult train(const model::MderConfig& model_config, const TrainConfig& config,
                  std::span<const corpus::LabeledSentence> train_set,
                  std::span<const corpus::LabeledSentence> cv_set,
                  const lexicon::Lexicon& lexicon, const EpochCallback& on_epoch) {
  config.validate();
  model_config.validate();
  if (train_set.empty() || cv_set.empty()) {
    throw ValidationError("training needs non-empty train and cv sets");
  }
  for (const auto& s : train_set) corpus::validate(s);

  model::Tagger current;
  current.config = model_config;
  current.vocab = corpus::build_vocab(train_set);
  current.lexicon = lexicon;
  current.params = model::init_params(model_config, current.vocab.size(), config.seed);

  std::vector<num::Tensor*> tensors;
  for (auto& [name, t] : current.params.named()) tensors.push_back(t);
  Adam adam(tensors, config);

  std::mt19937_64 shuffle_rng(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  TrainResult result;
  result.tagger = current;
  double best_f1 = -1.0;
  std::size_t stale = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      std::vector<const corpus::LabeledSentence*> members;
      for (std::size_t i = start; i < stop; ++i) members.push_back(&train_set[order[i]]);
      const model::Batch batch = model::make_batch(members, current.vocab, current.lexicon,
                                                   model_config.max_len);
      num::Tape tape;
      const model::ParamVars vars = model::bind(tape, current.params, true);
      const num::Var loss = model::loss(vars, batch, model_config);
      const double value = loss.value()[0];
      if (!std::isfinite(value)) {
        throw RuntimeFailure("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + ", batch " +
                             std::to_string(batch_index + 1));
      }
      loss_sum += value * static_cast<double>(members.size());
      auto grads = tape.backward(loss);
      adam.step(grads);
    }

    const Metrics cv = evaluate(current, cv_set);
    EpochRecord record{epoch, loss_sum / static_cast<double>(order.size()), cv.precision,
                       cv.recall, cv.f1};
    result.history.push_back(record);
    if (on_epoch) on_epoch(record);

    if (cv.f1 > best_f1) {
      best_f1 = cv.f1;
      result.best_epoch = epoch;
      result.tagger.params = current.params;
      stale = 0;
    } else if (++stale >= config.patience) {
      break;
    }
    if (config.target_f1 && cv.f1 >= *config.target_f1) break;
  }
  result.tagger.config = current.config;
  result.tagger.vocab = current.vocab;
  result.tagger.lexicon = current.lexicon;
  return result;
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string history_csv(std::span<const EpochRecord> history) {
  std::string out = "epoch,train_loss,cv_precision,cv_recall,cv_f1\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + format_double(r.train_loss) + "," +
           format_double(r.cv_precision) + "," + format_double(r.cv_recall) + "," +
           format_double(r.cv_f1) + "\n";
  }
  return out;
}

}  // namespace mder::train
