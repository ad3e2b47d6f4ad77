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
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mder/checkpoint.hpp"
#include "mder/corpus.hpp"
#include "mder/lexicon.hpp"
#include "mder/metrics.hpp"
#include "mder/model.hpp"

namespace mder::train {

struct TrainConfig {
  std::size_t batch_size = 16;
  std::size_t max_epochs = 100;
  // Adam
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double clip_norm = 5.0;  // global gradient norm
  std::size_t patience = 3;  // epochs without CV F1 improvement
  // Stop as soon as CV F1 reaches this value.
  std::optional<double> target_f1;
  std::uint64_t seed = 0;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double cv_precision = 0.0;
  double cv_recall = 0.0;
  double cv_f1 = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  model::Tagger tagger;  // parameters of the best-CV-F1 epoch
  std::vector<EpochRecord> history;
  std::size_t best_epoch = 0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

// Mini-batch training with early stopping on CV entity F1. The vocabulary
// is built from train_set only. Deterministic for a given seed. Throws
// RuntimeFailure naming the epoch and batch if the loss becomes non-finite.
TrainResult train(const model::MderConfig& model_config, const TrainConfig& config,
                  std::span<const corpus::LabeledSentence> train_set,
                  std::span<const corpus::LabeledSentence> cv_set,
                  const lexicon::Lexicon& lexicon, const EpochCallback& on_epoch = {});

// Decodes every sentence and scores it against its gold tags. Shards across
// `threads` workers; the result does not depend on the thread count.
Metrics evaluate(const model::Tagger& tagger,
                 std::span<const corpus::LabeledSentence> dataset,
                 std::size_t threads = 1, std::size_t batch_size = 16);

// Adam over a fixed list of tensors.
class Adam {
 public:
  Adam(std::vector<num::Tensor*> params, const TrainConfig& config);
  // Clips the gradients to the configured global norm, then updates.
  // Returns the pre-clip norm.
  double step(std::vector<num::Tensor>& grads);

 private:
  std::vector<num::Tensor*> params_;
  std::vector<num::Tensor> m_, v_;
  TrainConfig config_;
  std::size_t t_ = 0;
};

// "epoch,train_loss,cv_precision,cv_recall,cv_f1" plus one row per epoch.
std::string history_csv(std::span<const EpochRecord> history);

// Shortest round-trip decimal form.
std::string format_double(double v);

}  // namespace mder::train
