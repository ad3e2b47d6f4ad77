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

#include "mder/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mder/error.hpp"
#include "mder/utf8.hpp"

namespace mder::corpus {

namespace {

constexpr std::string_view kTagNames[kNumTags] = {"B-M", "I-M", "B-D", "I-D",
                                                  "O"};
constexpr std::string_view kDocIdPrefix = "#doc_id\t";

bool is_begin(Tag t) { return t == Tag::BM || t == Tag::BD; }

std::vector<std::string_view> split_lines(std::string_view content) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

}  // namespace

std::string_view tag_name(Tag tag) { return kTagNames[tag_index(tag)]; }

Tag parse_tag(std::string_view name) {
  for (std::size_t i = 0; i < kNumTags; ++i) {
    if (kTagNames[i] == name) return static_cast<Tag>(i);
  }
  throw ValidationError("unknown tag '" + std::string(name) + "'");
}

Tag tag_from_index(std::size_t index) {
  if (index >= kNumTags) {
    throw ValidationError("tag index out of range: " + std::to_string(index));
  }
  return static_cast<Tag>(index);
}

char entity_letter(EntityType t) { return t == EntityType::Method ? 'M' : 'D'; }

bool bio_transition_ok(std::optional<Tag> prev, Tag next) {
  if (next == Tag::IM) return prev == Tag::BM || prev == Tag::IM;
  if (next == Tag::ID) return prev == Tag::BD || prev == Tag::ID;
  return true;
}

std::optional<std::size_t> find_bio_violation(std::span<const Tag> tags) {
  std::optional<Tag> prev;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!bio_transition_ok(prev, tags[i])) return i;
    prev = tags[i];
  }
  return std::nullopt;
}

std::vector<EntitySpan> extract_spans(std::span<const Tag> tags) {
  if (auto bad = find_bio_violation(tags)) {
    throw ValidationError("BIO violation at position " + std::to_string(*bad));
  }
  std::vector<EntitySpan> spans;
  for (std::size_t i = 0; i < tags.size(); ++i) {
    if (!is_begin(tags[i])) continue;
    const EntityType type =
        tags[i] == Tag::BM ? EntityType::Method : EntityType::Dataset;
    std::size_t end = i + 1;
    while (end < tags.size() && tags[end] == inside_tag(type)) ++end;
    spans.push_back({type, i, end});
    i = end - 1;
  }
  return spans;
}

std::string LabeledSentence::text() const { return utf8::encode(chars); }

void validate(const LabeledSentence& s) {
  if (s.chars.size() != s.tags.size()) {
    throw ValidationError("sentence has " + std::to_string(s.chars.size()) +
                          " characters but " + std::to_string(s.tags.size()) +
                          " tags");
  }
  if (auto bad = find_bio_violation(s.tags)) {
    throw ValidationError("BIO violation at position " + std::to_string(*bad));
  }
}

std::vector<LabeledSentence> parse_conll(std::string_view content,
                                         const std::string& source_name,
                                         std::size_t max_len) {
  std::vector<LabeledSentence> out;
  LabeledSentence current;
  bool open = false;
  const auto flush = [&] {
    if (open && !current.chars.empty()) {
      if (current.chars.size() > max_len) {
        current.chars.resize(max_len);
        current.tags.resize(max_len);
      }
      out.push_back(std::move(current));
    }
    current = LabeledSentence{};
    open = false;
  };

  const auto lines = split_lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string_view line = lines[n];
    const std::size_t line_no = n + 1;
    if (line.empty()) {
      flush();
      continue;
    }
    if (line.starts_with(kDocIdPrefix)) {
      if (open && !current.chars.empty()) {
        throw ParseError(source_name, line_no,
                         "doc_id line inside a sentence");
      }
      current.doc_id = std::string(line.substr(kDocIdPrefix.size()));
      open = true;
      continue;
    }
    const std::size_t tab = line.rfind('\t');
    if (tab == std::string_view::npos) {
      throw ParseError(source_name, line_no,
                       "expected '<char>\\t<tag>', got '" + std::string(line) +
                           "'");
    }
    std::u32string ch;
    try {
      ch = utf8::decode(line.substr(0, tab));
    } catch (const ValidationError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (ch.size() != 1) {
      throw ParseError(source_name, line_no,
                       "expected exactly one character before the tab, got '" +
                           std::string(line.substr(0, tab)) + "'");
    }
    Tag tag;
    try {
      tag = parse_tag(line.substr(tab + 1));
    } catch (const ValidationError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    std::optional<Tag> prev;
    if (!current.tags.empty()) prev = current.tags.back();
    if (!bio_transition_ok(prev, tag)) {
      throw ParseError(source_name, line_no,
                       "BIO violation: " + std::string(tag_name(tag)) +
                           (prev ? " after " + std::string(tag_name(*prev))
                                 : std::string(" at sentence start")));
    }
    current.chars.push_back(ch[0]);
    current.tags.push_back(tag);
    open = true;
  }
  flush();
  return out;
}

std::vector<LabeledSentence> read_conll(const std::filesystem::path& path,
                                        std::size_t max_len) {
  return parse_conll(read_file(path), path.string(), max_len);
}

std::string format_conll(std::span<const LabeledSentence> sentences) {
  std::string out;
  for (const auto& s : sentences) {
    validate(s);
    if (s.doc_id) {
      out += kDocIdPrefix;
      out += *s.doc_id;
      out += '\n';
    }
    for (std::size_t i = 0; i < s.chars.size(); ++i) {
      out += utf8::encode(s.chars[i]);
      out += '\t';
      out += tag_name(s.tags[i]);
      out += '\n';
    }
    out += '\n';
  }
  return out;
}

void write_conll(std::span<const LabeledSentence> sentences,
                 const std::filesystem::path& path) {
  write_file(path, format_conll(sentences));
}

Vocabulary::Vocabulary(std::span<const char32_t> chars) {
  for (char32_t c : chars) {
    if (contains(c)) {
      throw ValidationError("duplicate vocabulary character U+" +
                            std::to_string(static_cast<std::uint32_t>(c)));
    }
    add(c);
  }
}

std::size_t Vocabulary::index(char32_t c) const {
  const auto it = index_.find(c);
  return it == index_.end() ? kUnk : it->second;
}

void Vocabulary::add(char32_t c) {
  if (contains(c)) return;
  index_.emplace(c, chars_.size() + 2);
  chars_.push_back(c);
}

Vocabulary build_vocab(std::span<const LabeledSentence> sentences) {
  if (sentences.empty()) {
    throw ValidationError("cannot build a vocabulary from an empty corpus");
  }
  Vocabulary vocab;
  for (const auto& s : sentences) {
    for (char32_t c : s.chars) vocab.add(c);
  }
  return vocab;
}

Encoded encode(std::u32string_view chars, const Vocabulary& vocab,
               std::size_t max_len) {
  Encoded out{std::vector<std::size_t>(max_len, Vocabulary::kPad),
              std::vector<std::uint8_t>(max_len, 0)};
  const std::size_t n = std::min(chars.size(), max_len);
  for (std::size_t i = 0; i < n; ++i) {
    out.ids[i] = vocab.index(chars[i]);
    out.mask[i] = 1;
  }
  return out;
}

void SplitSpec::validate() const {
  const auto ok = [](double w) { return std::isfinite(w) && w >= 0.0; };
  if (!ok(train_weight) || !ok(test_weight) || !ok(cv_weight) ||
      train_weight + test_weight + cv_weight <= 0.0) {
    throw ValidationError("split weights must be non-negative with a positive sum");
  }
}

SplitResult split(std::span<const LabeledSentence> sentences,
                  const SplitSpec& spec, std::uint64_t seed) {
  spec.validate();
  if (sentences.empty()) throw ValidationError("cannot split an empty corpus");
  const std::size_t n = sentences.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);

  const long double total = static_cast<long double>(spec.train_weight) +
                            spec.test_weight + spec.cv_weight;
  // The epsilon keeps exact ratios such as 200 * 7.5 / 10 from landing
  // just below an integer.
  const auto share = [&](double w) {
    return static_cast<std::size_t>(
        std::floor(static_cast<long double>(n) * w / total + 1e-9L));
  };
  const std::size_t n_train = std::min(share(spec.train_weight), n);
  const std::size_t n_test = std::min(share(spec.test_weight), n - n_train);

  SplitResult out;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& s = sentences[order[i]];
    if (i < n_train) {
      out.train.push_back(s);
    } else if (i < n_train + n_test) {
      out.test.push_back(s);
    } else {
      out.cv.push_back(s);
    }
  }
  return out;
}

std::vector<Document> parse_documents(std::string_view content,
                                      const std::string& source_name) {
  std::vector<Document> docs;
  std::set<std::string> ids;
  const auto lines = split_lines(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    const std::string trimmed = utf8::trim(lines[n]);
    if (trimmed.empty()) continue;
    const std::size_t line_no = n + 1;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(trimmed);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    Document doc;
    try {
      doc.id = obj.at("id").get<std::string>();
      doc.year = obj.at("year").get<int>();
      doc.venue = obj.value("venue", std::string{});
      for (const auto& s : obj.at("sentences")) {
        doc.sentences.push_back(
            utf8::normalize_controls(utf8::decode(s.get<std::string>())));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(source_name, line_no, e.what());
    } catch (const ValidationError& e) {
      throw ParseError(source_name, line_no, e.what());
    }
    if (doc.year < 1900 || doc.year > 2100) {
      throw ParseError(source_name, line_no,
                       "year " + std::to_string(doc.year) +
                           " outside [1900, 2100]");
    }
    if (!ids.insert(doc.id).second) {
      throw ParseError(source_name, line_no,
                       "duplicate document id '" + doc.id + "'");
    }
    docs.push_back(std::move(doc));
  }
  return docs;
}

std::vector<Document> read_documents(const std::filesystem::path& path) {
  return parse_documents(read_file(path), path.string());
}

void write_documents(std::span<const Document> docs,
                     const std::filesystem::path& path) {
  std::string out;
  for (const auto& d : docs) {
    nlohmann::json obj;
    obj["id"] = d.id;
    obj["year"] = d.year;
    obj["venue"] = d.venue;
    obj["sentences"] = nlohmann::json::array();
    for (const auto& s : d.sentences) obj["sentences"].push_back(utf8::encode(s));
    out += obj.dump();
    out += '\n';
  }
  write_file(path, out);
}

std::vector<std::string> parse_pool(std::string_view content) {
  std::vector<std::string> entries;
  for (std::string_view line : split_lines(content)) {
    const std::string entry = utf8::collapse_whitespace(line);
    if (entry.empty() || entry.front() == '#') continue;
    entries.push_back(entry);
  }
  return entries;
}

std::vector<std::string> read_pool(const std::filesystem::path& path) {
  return parse_pool(read_file(path));
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw RuntimeFailure("cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw RuntimeFailure("write failed for '" + path.string() + "'");
}

}  // namespace mder::corpus
