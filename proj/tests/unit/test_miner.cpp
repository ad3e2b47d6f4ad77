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

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "mder/error.hpp"
#include "mder/miner.hpp"
#include "mder/training.hpp"
#include "mder/utf8.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"

namespace mder::miner {
namespace {

MentionRecord method(const std::string& doc, int year, const std::string& name) {
  return {doc, year, corpus::EntityType::Method, name, canonicalize(name)};
}

std::vector<MentionRecord> worked_example() {
  return {method("d1", 2019, "svm"),  method("d1", 2019, "knn"),  method("d2", 2019, "svm"),
          method("d2", 2019, "knn"),  method("d2", 2019, "lstm"), method("d3", 2019, "svm")};
}

MethodGraph graph_from(std::initializer_list<std::tuple<const char*, const char*, std::size_t>> edges,
                       int year = 2000) {
  MethodGraph g;
  g.year = year;
  for (const auto& [a, b, w] : edges) g.add_edge(a, b, w);
  return g;
}

MethodGraph random_graph(std::mt19937_64& rng, std::size_t n, double density) {
  MethodGraph g;
  for (std::size_t i = 0; i < n; ++i) g.nodes.insert("n" + std::to_string(i));
  std::bernoulli_distribution keep(density);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      if (keep(rng)) g.add_edge("n" + std::to_string(i), "n" + std::to_string(j), 1 + rng() % 4);
    }
  }
  return g;
}

void expect_scores_near(const std::map<std::string, double>& a,
                        const std::map<std::string, double>& b) {
  ASSERT_EQ(a.size(), b.size());
  for (const auto& [name, v] : a) {
    ASSERT_TRUE(b.contains(name)) << name;
    EXPECT_NEAR(v, b.at(name), 1e-12 * std::max(1.0, std::abs(v))) << name;
  }
}

TEST(Canonicalize, Examples) {
  EXPECT_EQ(canonicalize(" SVM "), "svm");
  EXPECT_EQ(canonicalize("Support  Vector Machine"), "support vector machine");
  const AliasTable aliases = parse_alias_table("from,to\nSupport Vector Machine,SVM\n", "mem");
  EXPECT_EQ(canonicalize("Support Vector Machine", &aliases), "svm");
  EXPECT_EQ(canonicalize("support  vector machine", &aliases), "svm");
  EXPECT_THROW(canonicalize("   "), ValidationError);
  EXPECT_THROW(parse_alias_table("a,b,c\n", "mem"), ParseError);
}

TEST(BuildGraphs, WorkedExample) {
  const auto graphs = build_graphs(worked_example());
  ASSERT_EQ(graphs.size(), 1u);
  const MethodGraph& g = graphs.at(2019);
  EXPECT_EQ(g.nodes, (std::set<std::string>{"knn", "lstm", "svm"}));
  EXPECT_EQ(g.edges.size(), 3u);
  EXPECT_EQ(g.weight("svm", "knn"), 2u);
  EXPECT_EQ(g.weight("knn", "svm"), 2u);
  EXPECT_EQ(g.weight("svm", "lstm"), 1u);
  EXPECT_EQ(g.weight("knn", "lstm"), 1u);
  g.check();
}

TEST(BuildGraphs, SingleMethodAndDuplicates) {
  const auto one = build_graphs(std::vector<MentionRecord>{method("d", 2009, "SVM")});
  EXPECT_EQ(one.at(2009).nodes.size(), 1u);
  EXPECT_TRUE(one.at(2009).edges.empty());

  auto dup = worked_example();
  dup.push_back(method("d1", 2019, " SVM"));
  dup.push_back(method("d1", 2019, "svm"));
  EXPECT_EQ(build_graphs(dup), build_graphs(worked_example()));
}

TEST(BuildGraphs, DatasetsExcludedAndYearsSeparated) {
  auto mentions = worked_example();
  mentions.push_back({"d1", 2019, corpus::EntityType::Dataset, "MNIST", "mnist"});
  mentions.push_back(method("e1", 2014, "svm"));
  mentions.push_back(method("e1", 2014, "pmf"));
  const auto graphs = build_graphs(mentions);
  ASSERT_EQ(graphs.size(), 2u);
  EXPECT_FALSE(graphs.at(2019).nodes.contains("mnist"));
  EXPECT_EQ(graphs.at(2014).weight("svm", "pmf"), 1u);
  EXPECT_EQ(graphs.at(2019).weight("svm", "pmf"), 0u);
}

TEST(FilterEdges, StrictThreshold) {
  const auto g = graph_from({{"a", "b", 2}, {"b", "c", 3}, {"c", "d", 5}});
  const auto f = filter_edges(g, 2);
  EXPECT_EQ(f.edges.size(), 2u);
  EXPECT_EQ(f.weight("b", "c"), 3u);
  EXPECT_EQ(f.weight("c", "d"), 5u);
  EXPECT_FALSE(f.nodes.contains("a"));
  EXPECT_TRUE(filter_edges(g, 2, true).nodes.contains("a"));
  EXPECT_EQ(filter_edges(g, 0), g);
  EXPECT_TRUE(filter_edges(g, 5).edges.empty());
  EXPECT_TRUE(filter_edges(g, 5).nodes.empty());
  f.check();
}

TEST(FilterEdges, WorkedExampleAboveTwo) {
  const auto f = filter_edges(build_graphs(worked_example()).at(2019), 2);
  EXPECT_TRUE(f.edges.empty());
}

TEST(Betweenness, AnalyticAnchors) {
  const auto path = betweenness(graph_from({{"a", "b", 1}, {"b", "c", 1}}));
  EXPECT_EQ(path.at("b"), 1.0);
  EXPECT_EQ(path.at("a"), 0.0);
  EXPECT_EQ(path.at("c"), 0.0);
  for (std::size_t leaves = 2; leaves <= 7; ++leaves) {
    MethodGraph star;
    for (std::size_t i = 0; i < leaves; ++i) star.add_edge("x", "leaf" + std::to_string(i));
    EXPECT_EQ(betweenness(star).at("x"), leaves * (leaves - 1) / 2.0);
  }
}

TEST(Betweenness, MatchesPairwiseOracle) {
  std::mt19937_64 rng(101);
  for (int trial = 0; trial < 50; ++trial) {
    const auto g = random_graph(rng, 1 + rng() % 8, 0.2 + 0.1 * (trial % 6));
    const auto brandes = betweenness(g);
    const auto oracle = testing::pairwise_betweenness(g);
    expect_scores_near(brandes, oracle);
    double total = 0.0, oracle_total = 0.0;
    for (const auto& [n, v] : brandes) total += v;
    for (const auto& [n, v] : oracle) oracle_total += v;
    EXPECT_NEAR(total, oracle_total, 1e-9);
  }
}

TEST(Betweenness, InvariantUnderRelabeling) {
  std::mt19937_64 rng(202);
  for (int trial = 0; trial < 20; ++trial) {
    const auto g = random_graph(rng, 8, 0.4);
    std::vector<std::string> names(g.nodes.begin(), g.nodes.end());
    std::vector<std::string> shuffled = names;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < names.size(); ++i) rename[names[i]] = "z" + shuffled[i];
    MethodGraph h;
    for (const auto& n : g.nodes) h.nodes.insert(rename[n]);
    for (const auto& [key, w] : g.edges) h.add_edge(rename[key.first], rename[key.second], w);
    const auto a = betweenness(g), b = betweenness(h);
    for (const auto& n : names) EXPECT_NEAR(a.at(n), b.at(rename[n]), 1e-12);
  }
}

TEST(Betweenness, WeightedAndNormalizedOptions) {
  const auto g = graph_from({{"a", "b", 4}, {"b", "c", 4}, {"a", "d", 1}, {"d", "c", 1}});
  const auto plain = betweenness(g);
  for (const char* n : {"a", "b", "c", "d"}) EXPECT_EQ(plain.at(n), 0.5);
  const auto weighted = betweenness(g, {.weighted = true});
  EXPECT_EQ(weighted.at("b"), 1.0);
  EXPECT_EQ(weighted.at("d"), 0.0);
  EXPECT_EQ(weighted.at("a"), 0.5);
  EXPECT_EQ(weighted.at("c"), 0.5);
  const auto norm = betweenness(g, {.normalized = true});
  EXPECT_NEAR(norm.at("a"), 0.5 / 3.0, 1e-15);
}

TEST(TopK, Ordering) {
  const std::map<std::string, double> s = {{"a", 2}, {"b", 5}, {"c", 1}};
  const auto r = top_k(s, 2);
  ASSERT_EQ(r.size(), 2u);
  EXPECT_EQ(r[0].name, "b");
  EXPECT_EQ(r[1].name, "a");
  const std::map<std::string, double> tied = {{"x", 1}, {"c", 1}, {"m", 1}};
  const auto t = top_k(tied, 2);
  EXPECT_EQ(t[0].name, "c");
  EXPECT_EQ(t[1].name, "m");
  EXPECT_EQ(top_k(s, 10).size(), 3u);
  EXPECT_THROW(top_k(s, 0), ValidationError);
}

TEST(Export, EdgeCsvAndEmptyGraph) {
  const auto g = build_graphs(worked_example()).at(2019);
  EXPECT_EQ(to_edge_csv(std::span(&g, 1)),
            "year,src,dst,weight\n2019,knn,lstm,1\n2019,knn,svm,2\n2019,lstm,svm,1\n");
  const MethodGraph empty;
  EXPECT_EQ(to_edge_csv(std::span(&empty, 1)), "year,src,dst,weight\n");
}

TEST(Export, DotRoundTrip) {
  std::mt19937_64 rng(303);
  for (int trial = 0; trial < 10; ++trial) {
    auto g = random_graph(rng, 6, 0.5);
    g.add_edge("quote\"d", "back\\slash", 3);
    const auto parsed = testing::parse_dot(to_dot(g));
    EXPECT_EQ(parsed.nodes, std::multiset<std::string>(g.nodes.begin(), g.nodes.end()));
    std::multiset<std::tuple<std::string, std::string, std::size_t>> edges;
    for (const auto& [key, w] : g.edges) edges.emplace(key.first, key.second, w);
    EXPECT_EQ(parsed.edges, edges);
  }
}

TEST(Export, GraphmlAndRankCsv) {
  const auto g = graph_from({{"a&b", "c", 2}}, 2009);
  const std::string xml = to_graphml(g);
  EXPECT_NE(xml.find("<node id=\"a&amp;b\"/>"), std::string::npos);
  EXPECT_NE(xml.find("<data key=\"weight\">2</data>"), std::string::npos);
  std::map<int, std::vector<RankedNode>> ranks = {{2009, {{"svm", 6.0}, {"k, nn", 0.5}}}};
  EXPECT_EQ(to_rank_csv(ranks),
            "year,rank,method,betweenness\n2009,1,svm,6\n2009,2,\"k, nn\",0.5\n");
}

TEST(Export, FilesAreByteDeterministic) {
  std::mt19937_64 rng(404);
  const auto g = random_graph(rng, 7, 0.5);
  const auto dir = std::filesystem::temp_directory_path() / "mder_export_test";
  std::filesystem::create_directories(dir);
  for (const char* fmt : {"dot", "graphml", "edge-csv"}) {
    const auto format = parse_format(fmt);
    export_graph(g, format, dir / "a");
    export_graph(g, format, dir / "b");
    EXPECT_EQ(corpus::read_file(dir / "a"), corpus::read_file(dir / "b")) << fmt;
  }
  EXPECT_THROW(parse_format("png"), ValidationError);
  EXPECT_THROW(export_graph(g, ExportFormat::Dot, "/nonexistent-dir/g.dot"), RuntimeFailure);
  std::filesystem::remove_all(dir);
}

TEST(Mentions, CsvRoundTrip) {
  std::vector<MentionRecord> m = worked_example();
  m.push_back({"d,4", 2020, corpus::EntityType::Dataset, "AG \"News\"", "ag \"news\""});
  EXPECT_EQ(parse_mentions_csv(mentions_csv(m), "mem"), m);
  EXPECT_THROW(parse_mentions_csv("doc_id,year,type,surface,canonical\nd,x,M,a,a\n", "mem"),
               ParseError);
}

model::Tagger random_tagger(std::uint64_t seed) {
  const auto corpus = testing::make_synthetic({.train_sentences = 10, .seed = seed});
  model::Tagger t;
  t.config.char_emb_dim = 6;
  t.config.rule_emb_dim = 3;
  t.config.lstm_hidden = 4;
  t.config.cnn_filters = 2;
  t.config.attn_out = 5;
  t.vocab = corpus::build_vocab(corpus.train);
  t.lexicon = corpus.lexicon;
  t.params = model::init_params(t.config, t.vocab.size(), seed);
  return t;
}

corpus::Document doc_of(const std::string& id, int year,
                        const std::vector<corpus::LabeledSentence>& sentences) {
  corpus::Document d{id, year, "venue", {}};
  for (const auto& s : sentences) d.sentences.push_back(s.chars);
  return d;
}

TEST(PredictDoc, NoEntitiesGivesEmptyList) {
  auto t = random_tagger(1);
  t.params.projection_bias[corpus::tag_index(corpus::Tag::O)] = 1e3;
  const auto corpus = testing::make_synthetic({.train_sentences = 5, .seed = 2});
  EXPECT_TRUE(predict_doc(t, doc_of("d", 2010, corpus.train)).empty());
}

TEST(PredictDoc, SurfacesAreSourceSubstrings) {
  auto t = random_tagger(3);
  // Push decoding toward many short spans.
  t.params.projection_bias[corpus::tag_index(corpus::Tag::BM)] = 0.3;
  t.params.projection_bias[corpus::tag_index(corpus::Tag::BD)] = 0.3;
  const auto corpus = testing::make_synthetic({.train_sentences = 20, .seed = 4});
  const auto doc = doc_of("d", 2011, corpus.train);
  const auto mentions = predict_doc(t, doc);
  const auto tags = t.predict(doc.sentences);
  std::size_t expected = 0;
  for (std::size_t s = 0; s < tags.size(); ++s) {
    for (const auto& sp : corpus::extract_spans(tags[s])) {
      const auto chars = doc.sentences[s].substr(sp.start, sp.end - sp.start);
      if (utf8::trim(utf8::encode(chars)).empty()) continue;
      ASSERT_LT(expected, mentions.size());
      const auto& m = mentions[expected++];
      EXPECT_EQ(m.surface, utf8::encode(chars));
      EXPECT_EQ(m.type, sp.type);
      EXPECT_EQ(m.canonical, canonicalize(m.surface));
      EXPECT_EQ(m.year, 2011);
    }
  }
  EXPECT_EQ(mentions.size(), expected);
  EXPECT_GT(expected, 0u);
}

TEST(PredictCorpus, ThreadCountDoesNotChangeOutput) {
  auto t = random_tagger(5);
  t.params.projection_bias[corpus::tag_index(corpus::Tag::BM)] = 0.3;
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 7; ++i) {
    const auto c = testing::make_synthetic({.train_sentences = 3, .seed = 10 + std::uint64_t(i)});
    docs.push_back(doc_of("p" + std::to_string(i), 2009 + i % 3, c.train));
  }
  const auto one = predict_corpus(t, docs, 1);
  EXPECT_EQ(predict_corpus(t, docs, 3), one);
  EXPECT_EQ(predict_corpus(t, docs, 16), one);
}

TEST(PredictDoc, OverfitToyModelFindsBothMethods) {
  std::vector<corpus::LabeledSentence> train_set;
  const std::vector<std::string> names = {"SVM", "KNN", "LSTM", "CNN", "GRU", "HMM"};
  for (const auto& a : names) {
    for (const auto& b : names) {
      if (a != b) train_set.push_back(testing::markup("We compare [M " + a + "] and [M " + b + "]"));
    }
  }
  model::MderConfig cfg = model::MderConfig::debug_small();
  train::TrainConfig tc;
  tc.max_epochs = 100;
  tc.patience = 100;
  tc.target_f1 = 1.0;
  tc.learning_rate = 0.01;
  tc.seed = 3;
  const lexicon::Lexicon lex({}, {}, {"we", "and"});
  const auto result = train::train(cfg, tc, train_set, train_set, lex);
  ASSERT_EQ(result.history.back().cv_f1, 1.0);
  const corpus::Document doc{"toy", 2020, "v", {U"We compare SVM and KNN"}};
  const auto mentions = predict_doc(result.tagger, doc);
  ASSERT_EQ(mentions.size(), 2u);
  EXPECT_EQ(mentions[0].surface, "SVM");
  EXPECT_EQ(mentions[1].surface, "KNN");
  EXPECT_EQ(mentions[0].type, corpus::EntityType::Method);
  EXPECT_EQ(mentions[1].type, corpus::EntityType::Method);
}

}  // namespace
}  // namespace mder::miner
