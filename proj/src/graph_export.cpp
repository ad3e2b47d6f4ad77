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

#include <string>

#include "mder/corpus.hpp"
#include "mder/error.hpp"
#include "mder/miner.hpp"
#include "mder/training.hpp"

namespace mder::miner {

namespace {

std::string dot_id(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + "\"";
}

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

ExportFormat parse_format(std::string_view name) {
  if (name == "dot") return ExportFormat::Dot;
  if (name == "graphml") return ExportFormat::GraphML;
  if (name == "edge-csv") return ExportFormat::EdgeCsv;
  if (name == "rank-csv") return ExportFormat::RankCsv;
  throw ValidationError("unknown export format '" + std::string(name) +
                        "' (expected dot, graphml, edge-csv or rank-csv)");
}

std::string_view format_extension(ExportFormat format) {
  switch (format) {
    case ExportFormat::Dot: return ".dot";
    case ExportFormat::GraphML: return ".graphml";
    case ExportFormat::EdgeCsv: return ".csv";
    case ExportFormat::RankCsv: return ".csv";
  }
  return "";
}

std::string to_dot(const MethodGraph& graph) {
  std::string out = "graph " + dot_id("methods_" + std::to_string(graph.year)) + " {\n";
  for (const auto& node : graph.nodes) out += "  " + dot_id(node) + ";\n";
  for (const auto& [key, w] : graph.edges) {
    out += "  " + dot_id(key.first) + " -- " + dot_id(key.second) +
           " [weight=" + std::to_string(w) + "];\n";
  }
  return out + "}\n";
}

std::string to_graphml(const MethodGraph& graph) {
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\">\n"
      "  <key id=\"weight\" for=\"edge\" attr.name=\"weight\" attr.type=\"int\"/>\n"
      "  <graph id=\"methods_" + std::to_string(graph.year) + "\" edgedefault=\"undirected\">\n";
  for (const auto& node : graph.nodes) {
    out += "    <node id=\"" + xml_escape(node) + "\"/>\n";
  }
  for (const auto& [key, w] : graph.edges) {
    out += "    <edge source=\"" + xml_escape(key.first) + "\" target=\"" +
           xml_escape(key.second) + "\"><data key=\"weight\">" + std::to_string(w) +
           "</data></edge>\n";
  }
  return out + "  </graph>\n</graphml>\n";
}

std::string to_edge_csv(std::span<const MethodGraph> graphs) {
  std::string out = "year,src,dst,weight\n";
  for (const auto& g : graphs) {
    for (const auto& [key, w] : g.edges) {
      out += std::to_string(g.year) + "," + csv_field(key.first) + "," + csv_field(key.second) +
             "," + std::to_string(w) + "\n";
    }
  }
  return out;
}

std::string to_rank_csv(const std::map<int, std::vector<RankedNode>>& rankings) {
  std::string out = "year,rank,method,betweenness\n";
  for (const auto& [year, ranked] : rankings) {
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      out += std::to_string(year) + "," + std::to_string(i + 1) + "," + csv_field(ranked[i].name) +
             "," + train::format_double(ranked[i].score) + "\n";
    }
  }
  return out;
}

void export_graph(const MethodGraph& graph, ExportFormat format,
                  const std::filesystem::path& path) {
  switch (format) {
    case ExportFormat::Dot: corpus::write_file(path, to_dot(graph)); return;
    case ExportFormat::GraphML: corpus::write_file(path, to_graphml(graph)); return;
    case ExportFormat::EdgeCsv:
      corpus::write_file(path, to_edge_csv(std::span<const MethodGraph>(&graph, 1)));
      return;
    case ExportFormat::RankCsv:
      throw ValidationError("rank-csv exports rankings, not a graph");
  }
}

void export_rankings(const std::map<int, std::vector<RankedNode>>& rankings,
                     const std::filesystem::path& path) {
  corpus::write_file(path, to_rank_csv(rankings));
}

}  // namespace mder::miner
