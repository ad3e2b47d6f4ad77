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
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mder/corpus.hpp"
#include "mder/lexicon.hpp"
#include "mder/model.hpp"

namespace mder::model {

// Everything needed to tag raw text: architecture, vocabulary, gazetteer
// and weights.
struct Tagger {
  MderConfig config;
  corpus::Vocabulary vocab;
  lexicon::Lexicon lexicon;
  MderParams params;

  // Tags for each text, truncated to config.max_len. Empty texts yield empty
  // tag lists. Results do not depend on batch_size.
  std::vector<std::vector<corpus::Tag>> predict(std::span<const std::u32string> texts,
                                                std::size_t batch_size = 16) const;
};

// Layout: "MDER1", u64 little-endian length of a JSON block (config, vocab,
// lexicon, parameter names and shapes), the JSON, then per parameter its
// name, rank and extents (u32 little-endian) followed by the values as
// little-endian float32.
std::string serialize_checkpoint(const Tagger& tagger);
Tagger parse_checkpoint(std::string_view bytes, const std::string& source_name);

void save_checkpoint(const Tagger& tagger, const std::filesystem::path& path);
Tagger load_checkpoint(const std::filesystem::path& path);

}  // namespace mder::model
