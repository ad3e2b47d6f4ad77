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
#include <span>
#include <vector>

#include "mder/corpus.hpp"

namespace mder::train {

using corpus::EntitySpan;
using corpus::extract_spans;

struct Counts {
  std::size_t gold = 0;
  std::size_t predicted = 0;
  std::size_t correct = 0;

  Counts& operator+=(const Counts& o) {
    gold += o.gold;
    predicted += o.predicted;
    correct += o.correct;
    return *this;
  }
  friend bool operator==(const Counts&, const Counts&) = default;
};

double precision(const Counts& c);
double recall(const Counts& c);
// 2PR / (P + R), or 0 when P + R = 0.
double f1(double p, double r);

// Entity-level scores. A predicted span is correct when type, start and end
// all match a gold span. The first reported column ("accuracy" in some
// tables) is this precision.
struct Metrics {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  Counts method;
  Counts dataset;
  Counts spans;       // method + dataset
  Counts characters;  // non-O characters; correct = identical tag

  static Metrics from_counts(const Counts& method, const Counts& dataset,
                             const Counts& characters = {});
};

class MetricsAccumulator {
 public:
  void add(std::span<const corpus::Tag> gold, std::span<const corpus::Tag> predicted);
  void add_spans(std::span<const EntitySpan> gold, std::span<const EntitySpan> predicted);
  void merge(const MetricsAccumulator& other);
  Metrics result() const;
  std::size_t sentences() const { return sentences_; }

 private:
  Counts method_, dataset_, characters_;
  std::size_t sentences_ = 0;
};

}  // namespace mder::train
