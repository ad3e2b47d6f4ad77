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

#include "mder/lexicon.hpp"

#include <algorithm>

#include "mder/corpus.hpp"
#include "mder/error.hpp"
#include "mder/utf8.hpp"

namespace mder::lexicon {

namespace {

constexpr std::string_view kRuleTagNames[kNumRuleTags] = {"B-M", "I-M", "B-D",
                                                          "I-D", "O",   "UNK"};

std::set<std::string> normalize(std::vector<std::string> entries) {
  std::set<std::string> out;
  for (auto& e : entries) {
    std::string n = utf8::collapse_whitespace(e);
    if (!n.empty()) out.insert(std::move(n));
  }
  return out;
}

std::size_t word_count(const std::string& entry) {
  return static_cast<std::size_t>(std::count(entry.begin(), entry.end(), ' ')) + 1;
}

struct Word {
  std::size_t start;
  std::size_t end;
};

}  // namespace

std::string_view rule_tag_name(RuleTag t) {
  return kRuleTagNames[static_cast<std::size_t>(t)];
}

Lexicon::Lexicon(std::vector<std::string> methods,
                 std::vector<std::string> datasets,
                 std::vector<std::string> blacklist)
    : methods_(normalize(std::move(methods))),
      datasets_(normalize(std::move(datasets))),
      blacklist_(normalize(std::move(blacklist))) {
  for (const auto& m : methods_) {
    if (datasets_.contains(m)) {
      throw ValidationError("lexicon entry '" + m +
                            "' is in both the method and dataset whitelists");
    }
  }
  for (const auto& b : blacklist_) {
    if (methods_.contains(b) || datasets_.contains(b)) {
      throw ValidationError("lexicon entry '" + b +
                            "' is in the blacklist and a whitelist");
    }
  }
  for (const auto& b : blacklist_) blacklist_folded_.insert(utf8::to_lower(b));
  for (const auto* list : {&methods_, &datasets_, &blacklist_}) {
    for (const auto& e : *list) {
      longest_entry_words_ = std::max(longest_entry_words_, word_count(e));
    }
  }
  longest_entry_words_ = std::min(longest_entry_words_, kMaxNgram);
}

Lexicon load_lexicon(const std::filesystem::path& method_path,
                     const std::filesystem::path& dataset_path,
                     const std::filesystem::path& blacklist_path) {
  return Lexicon(corpus::read_pool(method_path), corpus::read_pool(dataset_path),
                 corpus::read_pool(blacklist_path));
}

Lexicon load_lexicon_dir(const std::filesystem::path& dir) {
  return load_lexicon(dir / "methods.txt", dir / "datasets.txt",
                      dir / "blacklist.txt");
}

std::vector<RuleTag> rule_tags(std::u32string_view chars,
                               const Lexicon& lexicon) {
  std::vector<RuleTag> tags(chars.size(), RuleTag::UNK);
  if (lexicon.longest_entry_words_ == 0) return tags;

  std::vector<Word> words;
  for (std::size_t i = 0; i < chars.size();) {
    if (utf8::is_space(chars[i])) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j < chars.size() && !utf8::is_space(chars[j])) ++j;
    words.push_back({i, j});
    i = j;
  }
  std::vector<std::string> encoded;
  encoded.reserve(words.size());
  for (const auto& w : words) {
    encoded.push_back(utf8::encode(chars.substr(w.start, w.end - w.start)));
  }

  const auto fill = [&](std::size_t from, std::size_t to, RuleTag first,
                        RuleTag rest) {
    for (std::size_t k = from; k < to; ++k) tags[k] = k == from ? first : rest;
  };

  for (std::size_t w = 0; w < words.size();) {
    const std::size_t max_n =
        std::min(lexicon.longest_entry_words_, words.size() - w);
    std::size_t matched = 0;
    for (std::size_t n = max_n; n >= 1 && matched == 0; --n) {
      std::string key = encoded[w];
      for (std::size_t k = 1; k < n; ++k) key += ' ' + encoded[w + k];
      const std::size_t from = words[w].start;
      const std::size_t to = words[w + n - 1].end;
      if (lexicon.methods_.contains(key)) {
        fill(from, to, RuleTag::BM, RuleTag::IM);
      } else if (lexicon.datasets_.contains(key)) {
        fill(from, to, RuleTag::BD, RuleTag::ID);
      } else if (lexicon.blacklist_folded_.contains(utf8::to_lower(key))) {
        fill(from, to, RuleTag::O, RuleTag::O);
      } else {
        continue;
      }
      matched = n;
    }
    w += matched == 0 ? 1 : matched;
  }
  return tags;
}

}  // namespace mder::lexicon
