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

#include "mder/metrics.hpp"

#include <algorithm>
#include <set>

#include "mder/error.hpp"

namespace mder::train {

double precision(const Counts& c) {
  return c.predicted == 0 ? 0.0
                          : static_cast<double>(c.correct) / static_cast<double>(c.predicted);
}

double recall(const Counts& c) {
  return c.gold == 0 ? 0.0
                     : static_cast<double>(c.correct) / static_cast<double>(c.gold);
}

double f1(double p, double r) { return p + r > 0.0 ? 2.0 * p * r / (p + r) : 0.0; }

Metrics Metrics::from_counts(const Counts& method, const Counts& dataset,
                             const Counts& characters) {
  Metrics m;
  m.method = method;
  m.dataset = dataset;
  m.spans = method;
  m.spans += dataset;
  m.characters = characters;
  m.precision = train::precision(m.spans);
  m.recall = train::recall(m.spans);
  m.f1 = train::f1(m.precision, m.recall);
  return m;
}

void MetricsAccumulator::add(std::span<const corpus::Tag> gold,
                             std::span<const corpus::Tag> predicted) {
  if (gold.size() != predicted.size()) {
    throw ValidationError("metrics: gold and predicted lengths differ");
  }
  const auto g = extract_spans(gold);
  const auto p = extract_spans(predicted);
  add_spans(g, p);
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const bool ge = gold[i] != corpus::Tag::O;
    const bool pe = predicted[i] != corpus::Tag::O;
    characters_.gold += ge;
    characters_.predicted += pe;
    characters_.correct += ge && gold[i] == predicted[i];
  }
}

void MetricsAccumulator::add_spans(std::span<const EntitySpan> gold,
                                   std::span<const EntitySpan> predicted) {
  const std::set<EntitySpan> gold_set(gold.begin(), gold.end());
  for (const auto& s : gold) {
    (s.type == corpus::EntityType::Method ? method_ : dataset_).gold += 1;
  }
  for (const auto& s : predicted) {
    Counts& c = s.type == corpus::EntityType::Method ? method_ : dataset_;
    c.predicted += 1;
    c.correct += gold_set.contains(s);
  }
  ++sentences_;
}

void MetricsAccumulator::merge(const MetricsAccumulator& other) {
  method_ += other.method_;
  dataset_ += other.dataset_;
  characters_ += other.characters_;
  sentences_ += other.sentences_;
}

Metrics MetricsAccumulator::result() const {
  return Metrics::from_counts(method_, dataset_, characters_);
}

}  // namespace mder::train
