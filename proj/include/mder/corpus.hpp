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
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace mder::corpus {

inline constexpr std::size_t kDefaultMaxLen = 600;

// Gold tag set. The numeric values double as CRF state indices.
enum class Tag : std::uint8_t { BM = 0, IM = 1, BD = 2, ID = 3, O = 4 };
inline constexpr std::size_t kNumTags = 5;

enum class EntityType : std::uint8_t { Method, Dataset };

std::string_view tag_name(Tag tag);
// Throws ValidationError for anything other than the five tag strings.
Tag parse_tag(std::string_view name);
inline std::size_t tag_index(Tag t) { return static_cast<std::size_t>(t); }
Tag tag_from_index(std::size_t index);

inline Tag begin_tag(EntityType t) {
  return t == EntityType::Method ? Tag::BM : Tag::BD;
}
inline Tag inside_tag(EntityType t) {
  return t == EntityType::Method ? Tag::IM : Tag::ID;
}
char entity_letter(EntityType t);

// True when `next` may follow `prev` (nullopt = sentence start).
bool bio_transition_ok(std::optional<Tag> prev, Tag next);
// Index of the first tag breaking BIO validity, or nullopt.
std::optional<std::size_t> find_bio_violation(std::span<const Tag> tags);

struct EntitySpan {
  EntityType type;
  std::size_t start;
  std::size_t end;  // exclusive

  friend bool operator==(const EntitySpan&, const EntitySpan&) = default;
  friend auto operator<=>(const EntitySpan&, const EntitySpan&) = default;
};

// Maximal B-X (I-X)* runs. Throws ValidationError on BIO violations.
std::vector<EntitySpan> extract_spans(std::span<const Tag> tags);

struct LabeledSentence {
  std::u32string chars;
  std::vector<Tag> tags;
  std::optional<std::string> doc_id;

  std::string text() const;
  friend bool operator==(const LabeledSentence&,
                         const LabeledSentence&) = default;
};

// Throws ValidationError if lengths differ or the tags are not BIO-valid.
void validate(const LabeledSentence& s);

// CoNLL-style character file: "<char>\t<tag>" per line, blank line between
// sentences. A "#doc_id\t<id>" line before a sentence carries its id.
// Sentences longer than max_len are truncated.
std::vector<LabeledSentence> read_conll(const std::filesystem::path& path,
                                        std::size_t max_len = kDefaultMaxLen);
std::vector<LabeledSentence> parse_conll(std::string_view content,
                                         const std::string& source_name,
                                         std::size_t max_len = kDefaultMaxLen);
void write_conll(std::span<const LabeledSentence> sentences,
                 const std::filesystem::path& path);
std::string format_conll(std::span<const LabeledSentence> sentences);

class Vocabulary {
 public:
  static constexpr std::size_t kPad = 0;
  static constexpr std::size_t kUnk = 1;

  Vocabulary() = default;
  // Rebuilds from the ordered list of real characters (indices 2, 3, ...).
  explicit Vocabulary(std::span<const char32_t> chars);

  std::size_t size() const { return chars_.size() + 2; }
  std::size_t index(char32_t c) const;
  bool contains(char32_t c) const { return index_.contains(c); }
  const std::vector<char32_t>& chars() const { return chars_; }
  void add(char32_t c);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.chars_ == b.chars_;
  }

 private:
  std::vector<char32_t> chars_;
  std::unordered_map<char32_t, std::size_t> index_;
};

// First-occurrence order. Throws ValidationError on empty input.
Vocabulary build_vocab(std::span<const LabeledSentence> sentences);

struct Encoded {
  std::vector<std::size_t> ids;
  std::vector<std::uint8_t> mask;
};
Encoded encode(std::u32string_view chars, const Vocabulary& vocab,
               std::size_t max_len);

struct SplitSpec {
  double train_weight = 7.5;
  double test_weight = 1.0;
  double cv_weight = 1.5;

  void validate() const;
};

struct SplitResult {
  std::vector<LabeledSentence> train;
  std::vector<LabeledSentence> test;
  std::vector<LabeledSentence> cv;
};

// Seeded shuffle, then contiguous slices: floor(n*train/total) train,
// floor(n*test/total) test, remainder cv.
SplitResult split(std::span<const LabeledSentence> sentences,
                  const SplitSpec& spec, std::uint64_t seed);

// Two-stage entity substitution. Output order: inputs, then stage-A copies,
// then one stage-B copy per sentence of the first two groups.
std::vector<LabeledSentence> augment(std::span<const LabeledSentence> sentences,
                                     std::span<const std::string> method_pool,
                                     std::span<const std::string> dataset_pool,
                                     std::uint64_t seed,
                                     std::size_t max_len = kDefaultMaxLen);

struct Document {
  std::string id;
  int year = 0;
  std::string venue;
  std::vector<std::u32string> sentences;
};

// JSON Lines. Validates year range and id uniqueness; tabs/newlines inside
// sentences become spaces.
std::vector<Document> read_documents(const std::filesystem::path& path);
std::vector<Document> parse_documents(std::string_view content,
                                      const std::string& source_name);
void write_documents(std::span<const Document> docs,
                     const std::filesystem::path& path);

// One entry per line; '#' comment lines and blank lines are skipped,
// entries are trimmed with internal whitespace collapsed.
std::vector<std::string> read_pool(const std::filesystem::path& path);
std::vector<std::string> parse_pool(std::string_view content);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view content);

}  // namespace mder::corpus
