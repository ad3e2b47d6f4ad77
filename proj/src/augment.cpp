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

#include <algorithm>
#include <random>

#include "mder/corpus.hpp"
#include "mder/error.hpp"
#include "mder/utf8.hpp"

namespace mder::corpus {

namespace {

using Rng = std::mt19937_64;

std::size_t draw(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

// Rebuilds `s` with every span's text replaced by pick(span). Characters
// outside spans are copied verbatim; replaced spans are re-tagged B-X I-X*.
template <typename Pick>
LabeledSentence substitute(const LabeledSentence& s,
                           const std::vector<EntitySpan>& spans, Pick&& pick,
                           std::size_t max_len) {
  LabeledSentence out;
  out.doc_id = s.doc_id;
  std::size_t cursor = 0;
  for (const auto& span : spans) {
    out.chars.append(s.chars, cursor, span.start - cursor);
    out.tags.insert(out.tags.end(), s.tags.begin() + cursor,
                    s.tags.begin() + span.start);
    const std::u32string replacement = pick(span);
    for (std::size_t i = 0; i < replacement.size(); ++i) {
      out.chars.push_back(replacement[i]);
      out.tags.push_back(i == 0 ? begin_tag(span.type) : inside_tag(span.type));
    }
    cursor = span.end;
  }
  out.chars.append(s.chars, cursor);
  out.tags.insert(out.tags.end(), s.tags.begin() + cursor, s.tags.end());
  if (out.chars.size() > max_len) {
    out.chars.resize(max_len);
    out.tags.resize(max_len);
  }
  return out;
}

std::vector<std::u32string> decode_pool(std::span<const std::string> pool,
                                        const char* name) {
  std::vector<std::u32string> out;
  for (const auto& entry : pool) {
    auto chars = utf8::normalize_controls(utf8::decode(entry));
    if (chars.empty()) {
      throw ValidationError(std::string(name) + " pool contains an empty entry");
    }
    out.push_back(std::move(chars));
  }
  return out;
}

}  // namespace

std::vector<LabeledSentence> augment(std::span<const LabeledSentence> sentences,
                                     std::span<const std::string> method_pool,
                                     std::span<const std::string> dataset_pool,
                                     std::uint64_t seed, std::size_t max_len) {
  if (method_pool.empty() || dataset_pool.empty()) {
    throw ValidationError("augmentation pools must be non-empty");
  }
  const auto methods = decode_pool(method_pool, "method");
  const auto datasets = decode_pool(dataset_pool, "dataset");
  Rng rng(seed);

  std::vector<LabeledSentence> out(sentences.begin(), sentences.end());
  for (const auto& s : out) validate(s);

  // Stage A: sentences whose only entities are datasets get one copy with
  // every dataset swapped for a different pool entry.
  const std::size_t n_input = out.size();
  for (std::size_t k = 0; k < n_input; ++k) {
    const LabeledSentence& s = out[k];
    const auto spans = extract_spans(s.tags);
    const bool only_datasets =
        !spans.empty() && std::all_of(spans.begin(), spans.end(), [](auto& sp) {
          return sp.type == EntityType::Dataset;
        });
    if (!only_datasets) continue;
    if (datasets.size() < 2) {
      throw ValidationError(
          "dataset pool needs at least 2 entries for substitution");
    }
    auto pick = [&](const EntitySpan& span) {
      const std::u32string current =
          s.chars.substr(span.start, span.end - span.start);
      std::vector<std::size_t> candidates;
      for (std::size_t i = 0; i < datasets.size(); ++i) {
        if (datasets[i] != current) candidates.push_back(i);
      }
      if (candidates.empty()) {
        throw ValidationError("dataset pool has no entry different from '" +
                              utf8::encode(current) + "'");
      }
      return datasets[candidates[draw(rng, candidates.size())]];
    };
    LabeledSentence copy = substitute(s, spans, pick, max_len);
    out.push_back(std::move(copy));
  }

  // Stage B: one lowercase copy of everything produced so far.
  const std::size_t n_after_a = out.size();
  for (std::size_t k = 0; k < n_after_a; ++k) {
    const auto spans = extract_spans(out[k].tags);
    auto pick = [&](const EntitySpan& span) {
      const auto& pool =
          span.type == EntityType::Method ? methods : datasets;
      return utf8::to_lower(pool[draw(rng, pool.size())]);
    };
    LabeledSentence copy = substitute(out[k], spans, pick, max_len);
    out.push_back(std::move(copy));
  }
  return out;
}

}  // namespace mder::corpus
