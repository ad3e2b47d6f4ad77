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
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mder/checkpoint.hpp"
#include "mder/corpus.hpp"

namespace mder::miner {

struct MentionRecord {
  std::string doc_id;
  int year = 0;
  corpus::EntityType type = corpus::EntityType::Method;
  std::string surface;
  std::string canonical;

  friend bool operator==(const MentionRecord&, const MentionRecord&) = default;
};

// canonical name -> canonical name
using AliasTable = std::map<std::string, std::string>;

// CSV with "from,to" rows (an optional "from,to" header is skipped). Both
// columns are canonicalized on load.
AliasTable read_alias_table(const std::filesystem::path& path);
AliasTable parse_alias_table(std::string_view content, const std::string& source_name);

// Trim, collapse whitespace, case-fold, then apply the alias table.
// Throws ValidationError for blank input.
std::string canonicalize(std::string_view surface, const AliasTable* aliases = nullptr);

// Decoded mentions of one document, in sentence order; repeated mentions
// are kept.
std::vector<MentionRecord> predict_doc(const model::Tagger& tagger,
                                       const corpus::Document& doc,
                                       const AliasTable* aliases = nullptr);

// Documents are tagged on up to `threads` workers; output order follows the
// input regardless of thread count.
std::vector<MentionRecord> predict_corpus(const model::Tagger& tagger,
                                          std::span<const corpus::Document> docs,
                                          std::size_t threads = 1,
                                          const AliasTable* aliases = nullptr);

// "doc_id,year,type,surface,canonical"
std::string mentions_csv(std::span<const MentionRecord> mentions);
std::vector<MentionRecord> parse_mentions_csv(std::string_view content,
                                              const std::string& source_name);

// Undirected co-occurrence graph for one year. Edges are keyed by the
// lexicographically ordered endpoint pair, so symmetry holds by
// construction.
struct MethodGraph {
  int year = 0;
  std::set<std::string> nodes;
  std::map<std::pair<std::string, std::string>, std::size_t> edges;

  // Adds `by` to the a--b weight (a != b); inserts both nodes.
  void add_edge(const std::string& a, const std::string& b, std::size_t by = 1);
  std::size_t weight(const std::string& a, const std::string& b) const;
  // Throws ValidationError on self-loops, zero weights or unknown endpoints.
  void check() const;

  friend bool operator==(const MethodGraph&, const MethodGraph&) = default;
};

// Per year: nodes are the method names any paper mentions; an edge weight
// is the number of papers mentioning both endpoints. Dataset mentions are
// ignored.
std::map<int, MethodGraph> build_graphs(std::span<const MentionRecord> mentions);

// Keeps edges with weight > min_exclusive. Nodes left without edges are
// dropped unless keep_isolated.
MethodGraph filter_edges(const MethodGraph& graph, std::size_t min_exclusive,
                         bool keep_isolated = false);

struct CentralityOptions {
  // Shortest paths use 1/weight as edge length instead of hop count.
  bool weighted = false;
  // Divide by (n-1)(n-2)/2.
  bool normalized = false;
};

// Brandes accumulation; each unordered endpoint pair counted once.
std::map<std::string, double> betweenness(const MethodGraph& graph,
                                          const CentralityOptions& options = {});

// Hop-count Brandes over any field type constructible from an integer
// (double here; an exact rational in verification code). Unnormalized,
// each unordered pair counted once.
template <typename Scalar>
std::map<std::string, Scalar> hop_betweenness(const MethodGraph& graph) {
  const std::vector<std::string> names(graph.nodes.begin(), graph.nodes.end());
  const std::size_t n = names.size();
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[names[i]] = i;
  std::vector<std::vector<std::size_t>> adj(n);
  for (const auto& [key, w] : graph.edges) {
    const std::size_t a = index.at(key.first), b = index.at(key.second);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  constexpr std::size_t kUnreached = std::numeric_limits<std::size_t>::max();
  std::vector<Scalar> score(n, Scalar(0));
  for (std::size_t s = 0; s < n; ++s) {
    std::vector<std::size_t> stack;
    std::vector<std::vector<std::size_t>> preds(n);
    std::vector<std::size_t> dist(n, kUnreached);
    std::vector<Scalar> sigma(n, Scalar(0)), delta(n, Scalar(0));
    sigma[s] = Scalar(1);
    dist[s] = 0;
    std::queue<std::size_t> queue;
    queue.push(s);
    while (!queue.empty()) {
      const std::size_t v = queue.front();
      queue.pop();
      stack.push_back(v);
      for (std::size_t w : adj[v]) {
        if (dist[w] == kUnreached) {
          dist[w] = dist[v] + 1;
          queue.push(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }
    for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
      const std::size_t w = *it;
      for (std::size_t v : preds[w]) delta[v] += sigma[v] / sigma[w] * (Scalar(1) + delta[w]);
      if (w != s) score[w] += delta[w];
    }
  }
  std::map<std::string, Scalar> out;
  // Every unordered pair was reached from both endpoints.
  for (std::size_t i = 0; i < n; ++i) out[names[i]] = score[i] / Scalar(2);
  return out;
}

struct RankedNode {
  std::string name;
  double score = 0.0;
};

// Descending score, ties by name; at most k entries.
std::vector<RankedNode> top_k(const std::map<std::string, double>& scores, std::size_t k);

enum class ExportFormat { Dot, GraphML, EdgeCsv, RankCsv };
ExportFormat parse_format(std::string_view name);
std::string_view format_extension(ExportFormat format);

std::string to_dot(const MethodGraph& graph);
std::string to_graphml(const MethodGraph& graph);
// "year,src,dst,weight"
std::string to_edge_csv(std::span<const MethodGraph> graphs);
// "year,rank,method,betweenness"
std::string to_rank_csv(const std::map<int, std::vector<RankedNode>>& rankings);

void export_graph(const MethodGraph& graph, ExportFormat format,
                  const std::filesystem::path& path);
void export_rankings(const std::map<int, std::vector<RankedNode>>& rankings,
                     const std::filesystem::path& path);

std::string csv_field(std::string_view field);
std::vector<std::string> parse_csv_line(std::string_view line);

}  // namespace mder::miner
