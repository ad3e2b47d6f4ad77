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
#include <filesystem>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mder::lexicon {

// Per-character gazetteer tag fed to the rule embedding. UNK is the
// default for characters no list claims, including whitespace.
enum class RuleTag : std::uint8_t { BM = 0, IM = 1, BD = 2, ID = 3, O = 4, UNK = 5 };
inline constexpr std::size_t kNumRuleTags = 6;
inline constexpr std::size_t kMaxNgram = 5;

std::string_view rule_tag_name(RuleTag t);

class Lexicon {
 public:
  Lexicon() = default;
  // Entries are whitespace-normalized. Throws ValidationError naming the
  // first entry that appears in two lists.
  Lexicon(std::vector<std::string> methods, std::vector<std::string> datasets,
          std::vector<std::string> blacklist);

  const std::set<std::string>& methods() const { return methods_; }
  const std::set<std::string>& datasets() const { return datasets_; }
  const std::set<std::string>& blacklist() const { return blacklist_; }
  bool empty() const {
    return methods_.empty() && datasets_.empty() && blacklist_.empty();
  }

  friend bool operator==(const Lexicon&, const Lexicon&) = default;

 private:
  std::set<std::string> methods_;
  std::set<std::string> datasets_;
  std::set<std::string> blacklist_;
  std::set<std::string> blacklist_folded_;
  std::size_t longest_entry_words_ = 0;

  friend std::vector<RuleTag> rule_tags(std::u32string_view, const Lexicon&);
};

Lexicon load_lexicon(const std::filesystem::path& method_path,
                     const std::filesystem::path& dataset_path,
                     const std::filesystem::path& blacklist_path);
// methods.txt, datasets.txt, blacklist.txt inside `dir`.
Lexicon load_lexicon_dir(const std::filesystem::path& dir);

// Greedy leftmost-longest match over whitespace-delimited words, up to
// kMaxNgram words per entry. Whitelists match case-sensitively, the
// blacklist case-insensitively; ties go method > dataset > blacklist.
std::vector<RuleTag> rule_tags(std::u32string_view chars, const Lexicon& lexicon);

}  // namespace mder::lexicon
