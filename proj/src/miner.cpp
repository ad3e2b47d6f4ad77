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

#include "mder/miner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>

#include "mder/error.hpp"
#include "mder/utf8.hpp"

namespace mder::miner {

namespace {

std::vector<std::string_view> lines_of(std::string_view content) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (pos < content.size()) {
    std::size_t nl = content.find('\n', pos);
    if (nl == std::string_view::npos) nl = content.size();
    std::string_view line = content.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.push_back(line);
    pos = nl + 1;
  }
  return out;
}

}  // namespace

std::vector<std::string> parse_csv_line(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) throw ValidationError("unterminated quoted CSV field");
  return fields;
}

std::string csv_field(std::string_view field) {
  if (field.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

AliasTable parse_alias_table(std::string_view content, const std::string& source_name) {
  AliasTable table;
  const auto lines = lines_of(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (utf8::trim(lines[n]).empty()) continue;
    std::vector<std::string> f;
    try {
      f = parse_csv_line(lines[n]);
    } catch (const ValidationError& e) {
      throw ParseError(source_name, n + 1, e.what());
    }
    if (f.size() != 2) throw ParseError(source_name, n + 1, "expected 'from,to'");
    if (n == 0 && f[0] == "from" && f[1] == "to") continue;
    try {
      table[canonicalize(f[0])] = canonicalize(f[1]);
    } catch (const ValidationError& e) {
      throw ParseError(source_name, n + 1, e.what());
    }
  }
  return table;
}

AliasTable read_alias_table(const std::filesystem::path& path) {
  return parse_alias_table(corpus::read_file(path), path.string());
}

std::string canonicalize(std::string_view surface, const AliasTable* aliases) {
  std::string out = utf8::to_lower(utf8::collapse_whitespace(surface));
  if (out.empty()) throw ValidationError("cannot canonicalize an empty mention");
  if (aliases) {
    const auto it = aliases->find(out);
    if (it != aliases->end()) return it->second;
  }
  return out;
}

std::vector<MentionRecord> predict_doc(const model::Tagger& tagger,
                                       const corpus::Document& doc,
                                       const AliasTable* aliases) {
  const auto tags = tagger.predict(doc.sentences);
  std::vector<MentionRecord> out;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    for (const auto& span : corpus::extract_spans(tags[s])) {
      const std::u32string_view chars =
          std::u32string_view(doc.sentences[s]).substr(span.start, span.end - span.start);
      MentionRecord m;
      m.doc_id = doc.id;
      m.year = doc.year;
      m.type = span.type;
      m.surface = utf8::encode(chars);
      if (utf8::trim(m.surface).empty()) continue;
      m.canonical = canonicalize(m.surface, aliases);
      out.push_back(std::move(m));
    }
  }
  return out;
}

std::vector<MentionRecord> predict_corpus(const model::Tagger& tagger,
                                          std::span<const corpus::Document> docs,
                                          std::size_t threads, const AliasTable* aliases) {
  std::vector<std::vector<MentionRecord>> per_doc(docs.size());
  threads = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(docs.size(), 1));
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < threads; ++w) {
    workers.emplace_back([&, w] {
      for (std::size_t i = w; i < docs.size(); i += threads) {
        per_doc[i] = predict_doc(tagger, docs[i], aliases);
      }
    });
  }
  for (auto& t : workers) t.join();
  std::vector<MentionRecord> out;
  for (auto& v : per_doc) out.insert(out.end(), v.begin(), v.end());
  return out;
}

std::string mentions_csv(std::span<const MentionRecord> mentions) {
  std::string out = "doc_id,year,type,surface,canonical\n";
  for (const auto& m : mentions) {
    out += csv_field(m.doc_id) + "," + std::to_string(m.year) + "," +
           corpus::entity_letter(m.type) + "," + csv_field(m.surface) + "," +
           csv_field(m.canonical) + "\n";
  }
  return out;
}

std::vector<MentionRecord> parse_mentions_csv(std::string_view content,
                                              const std::string& source_name) {
  std::vector<MentionRecord> out;
  const auto lines = lines_of(content);
  for (std::size_t n = 0; n < lines.size(); ++n) {
    if (lines[n].empty()) continue;
    if (n == 0 && lines[n].starts_with("doc_id,")) continue;
    std::vector<std::string> f;
    try {
      f = parse_csv_line(lines[n]);
    } catch (const ValidationError& e) {
      throw ParseError(source_name, n + 1, e.what());
    }
    if (f.size() != 5 || (f[2] != "M" && f[2] != "D")) {
      throw ParseError(source_name, n + 1, "expected doc_id,year,type(M|D),surface,canonical");
    }
    MentionRecord m;
    m.doc_id = f[0];
    try {
      m.year = std::stoi(f[1]);
    } catch (const std::exception&) {
      throw ParseError(source_name, n + 1, "bad year '" + f[1] + "'");
    }
    m.type = f[2] == "M" ? corpus::EntityType::Method : corpus::EntityType::Dataset;
    m.surface = f[3];
    m.canonical = f[4];
    if (m.canonical.empty()) throw ParseError(source_name, n + 1, "empty canonical name");
    out.push_back(std::move(m));
  }
  return out;
}

void MethodGraph::add_edge(const std::string& a, const std::string& b, std::size_t by) {
  if (a == b) throw ValidationError("self-loop on '" + a + "'");
  nodes.insert(a);
  nodes.insert(b);
  edges[std::minmax(a, b)] += by;
}

std::size_t MethodGraph::weight(const std::string& a, const std::string& b) const {
  const auto it = edges.find(std::minmax(a, b));
  return it == edges.end() ? 0 : it->second;
}

void MethodGraph::check() const {
  for (const auto& [key, w] : edges) {
    if (key.first >= key.second) throw ValidationError("edge key not ordered or self-loop");
    if (w == 0) throw ValidationError("zero edge weight");
    if (!nodes.contains(key.first) || !nodes.contains(key.second)) {
      throw ValidationError("edge endpoint missing from node set");
    }
  }
}

std::map<int, MethodGraph> build_graphs(std::span<const MentionRecord> mentions) {
  // year -> paper -> methods
  std::map<int, std::map<std::string, std::set<std::string>>> papers;
  for (const auto& m : mentions) {
    if (m.type != corpus::EntityType::Method) continue;
    papers[m.year][m.doc_id].insert(m.canonical);
  }
  std::map<int, MethodGraph> graphs;
  for (const auto& [year, docs] : papers) {
    MethodGraph& g = graphs[year];
    g.year = year;
    for (const auto& [doc, methods] : docs) {
      g.nodes.insert(methods.begin(), methods.end());
      for (auto a = methods.begin(); a != methods.end(); ++a) {
        for (auto b = std::next(a); b != methods.end(); ++b) g.add_edge(*a, *b);
      }
    }
  }
  return graphs;
}

MethodGraph filter_edges(const MethodGraph& graph, std::size_t min_exclusive,
                         bool keep_isolated) {
  MethodGraph out;
  out.year = graph.year;
  if (keep_isolated) out.nodes = graph.nodes;
  for (const auto& [key, w] : graph.edges) {
    if (w > min_exclusive) out.add_edge(key.first, key.second, w);
  }
  return out;
}

std::map<std::string, double> betweenness(const MethodGraph& graph,
                                          const CentralityOptions& options) {
  const std::size_t n = graph.nodes.size();
  const double norm = options.normalized && n > 2
                          ? 2.0 / (static_cast<double>(n - 1) * static_cast<double>(n - 2))
                          : 1.0;
  if (!options.weighted) {
    auto out = hop_betweenness<double>(graph);
    for (auto& [name, v] : out) v *= norm;
    return out;
  }

  // Dijkstra with 1/weight edge lengths; path lengths within 1e-12
  // (relative) count as equal.
  const std::vector<std::string> names(graph.nodes.begin(), graph.nodes.end());
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;
  std::vector<std::vector<std::pair<std::size_t, double>>> adj(n);
  for (const auto& [key, w] : graph.edges) {
    const std::size_t a = index.at(key.first), b = index.at(key.second);
    const double len = 1.0 / static_cast<double>(w);
    adj[a].emplace_back(b, len);
    adj[b].emplace_back(a, len);
  }
  const auto same = [](double a, double b) {
    return std::abs(a - b) <= 1e-12 * std::max(1.0, std::max(std::abs(a), std::abs(b)));
  };
  std::vector<double> score(n, 0.0);
  constexpr double kInf = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<double> sigma(n, 0.0), dist(n, kInf), delta(n, 0.0);
    sigma[s] = 1.0;
    dist[s] = 0.0;
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    std::vector<bool> done(n, false);
    heap.emplace(0.0, s);
    while (!heap.empty()) {
      const auto [d, v] = heap.top();
      heap.pop();
      if (done[v]) continue;
      done[v] = true;
      stack.push_back(v);
      for (const auto& [w, len] : adj[v]) {
        const double nd = d + len;
        if (dist[w] == kInf || (!same(nd, dist[w]) && nd < dist[w])) {
          dist[w] = nd;
          sigma[w] = sigma[v];
          preds[w] = {v};
          heap.emplace(nd, w);
        } else if (same(nd, dist[w]) && !done[w]) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) score[w] += delta[w];
    }
  }
  std::map<std::string, double> out;
  for (std::size_t i = 0; i < n; ++i) out[names[i]] = score[i] / 2.0 * norm;
  return out;
}

std::vector<RankedNode> top_k(const std::map<std::string, double>& scores, std::size_t k) {
  if (k == 0) throw ValidationError("top_k: k must be >= 1");
  std::vector<RankedNode> ranked;
  for (const auto& [name, s] : scores) ranked.push_back({name, s});
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedNode& a, const RankedNode& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.name < b.name;
  });
  if (ranked.size() > k) ranked.resize(k);
  return ranked;
}

}  // namespace mder::miner
