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

#include "mder/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>

#include "json.hpp"
#include "mder/error.hpp"
#include "mder/utf8.hpp"

namespace mder::model {

namespace {

constexpr std::string_view kMagic = "MDER1";

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
 public:
  Reader(std::string_view bytes, const std::string& source)
      : bytes_(bytes), source_(source) {}

  template <typename T>
  T get() {
    T v;
    std::memcpy(&v, take(sizeof(T)).data(), sizeof(T));
    return v;
  }

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) fail("truncated checkpoint");
    std::string_view out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  bool done() const { return pos_ == bytes_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw ValidationError(source_ + ": " + what);
  }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

std::vector<std::string> as_list(const std::set<std::string>& s) {
  return {s.begin(), s.end()};
}

}  // namespace

std::vector<std::vector<corpus::Tag>> Tagger::predict(
    std::span<const std::u32string> texts, std::size_t batch_size) const {
  std::vector<std::vector<corpus::Tag>> out(texts.size());
  std::vector<std::size_t> pending;
  const auto flush = [&] {
    if (pending.empty()) return;
    std::vector<std::u32string_view> views;
    for (std::size_t i : pending) views.emplace_back(texts[i]);
    const Batch batch = make_batch(views, vocab, lexicon, config.max_len);
    auto tags = decode(params, batch, config);
    for (std::size_t k = 0; k < pending.size(); ++k) out[pending[k]] = std::move(tags[k]);
    pending.clear();
  };
  for (std::size_t i = 0; i < texts.size(); ++i) {
    if (texts[i].empty()) continue;
    pending.push_back(i);
    if (pending.size() == std::max<std::size_t>(batch_size, 1)) flush();
  }
  flush();
  return out;
}

std::string serialize_checkpoint(const Tagger& tagger) {
  nlohmann::json header;
  header["config"] = tagger.config.to_json();
  nlohmann::json vocab = nlohmann::json::array();
  for (char32_t c : tagger.vocab.chars()) vocab.push_back(utf8::encode(c));
  header["vocab"] = vocab;
  header["lexicon"] = {{"methods", as_list(tagger.lexicon.methods())},
                       {"datasets", as_list(tagger.lexicon.datasets())},
                       {"blacklist", as_list(tagger.lexicon.blacklist())}};
  nlohmann::json params = nlohmann::json::array();
  const auto named = tagger.params.named();
  for (const auto& [name, t] : named) {
    params.push_back({{"name", name}, {"shape", t->shape()}});
  }
  header["params"] = params;
  const std::string json = header.dump();

  std::string out(kMagic);
  put<std::uint64_t>(out, json.size());
  out += json;
  for (const auto& [name, t] : named) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t->rank()));
    for (std::size_t d : t->shape()) put<std::uint32_t>(out, static_cast<std::uint32_t>(d));
    for (double v : t->data()) put<float>(out, static_cast<float>(v));
  }
  return out;
}

Tagger parse_checkpoint(std::string_view bytes, const std::string& source_name) {
  Reader in(bytes, source_name);
  if (in.take(kMagic.size()) != kMagic) in.fail("not an MDER1 checkpoint");
  const auto json_len = in.get<std::uint64_t>();
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(in.take(json_len));
  } catch (const nlohmann::json::exception& e) {
    in.fail(std::string("bad config block: ") + e.what());
  }

  Tagger tagger;
  try {
    tagger.config = MderConfig::from_json(header.at("config"));
    std::vector<char32_t> chars;
    for (const auto& c : header.at("vocab")) {
      const std::u32string decoded = utf8::decode(c.get<std::string>());
      if (decoded.size() != 1) in.fail("vocabulary entry is not one character");
      chars.push_back(decoded[0]);
    }
    tagger.vocab = corpus::Vocabulary(chars);
    const auto& lex = header.at("lexicon");
    tagger.lexicon = lexicon::Lexicon(lex.at("methods").get<std::vector<std::string>>(),
                                      lex.at("datasets").get<std::vector<std::string>>(),
                                      lex.at("blacklist").get<std::vector<std::string>>());
  } catch (const nlohmann::json::exception& e) {
    in.fail(std::string("bad config block: ") + e.what());
  }

  const auto expected = expected_shapes(tagger.config, tagger.vocab.size());
  tagger.params = init_params(tagger.config, tagger.vocab.size(), 0);
  auto named = tagger.params.named();
  for (std::size_t k = 0; k < expected.size(); ++k) {
    const auto name_len = in.get<std::uint32_t>();
    const std::string name(in.take(name_len));
    if (name != expected[k].first) {
      in.fail("expected parameter '" + expected[k].first + "', found '" + name + "'");
    }
    const auto rank = in.get<std::uint32_t>();
    num::Shape shape;
    for (std::uint32_t d = 0; d < rank; ++d) shape.push_back(in.get<std::uint32_t>());
    if (shape != expected[k].second) {
      in.fail("parameter '" + name + "' has shape " + num::shape_string(shape) +
              ", config requires " + num::shape_string(expected[k].second));
    }
    num::Tensor& t = *named[k].second;
    for (double& v : t.data()) v = static_cast<double>(in.get<float>());
  }
  if (!in.done()) in.fail("trailing bytes after the last parameter");
  return tagger;
}

void save_checkpoint(const Tagger& tagger, const std::filesystem::path& path) {
  corpus::write_file(path, serialize_checkpoint(tagger));
}

Tagger load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(corpus::read_file(path), path.string());
}

}  // namespace mder::model
