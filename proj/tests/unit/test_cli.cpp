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

#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "mder/cli.hpp"
#include "mder/corpus.hpp"
#include "mder/miner.hpp"
#include "synthetic.hpp"

namespace mder::cli {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mder_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  // Synthetic train/cv files plus a gazetteer directory.
  void write_training_inputs(std::size_t sentences) {
    const auto c = testing::make_synthetic(
        {.train_sentences = sentences, .test_sentences = sentences / 4, .seed = 9,
         .short_templates = true});
    corpus::write_conll(c.train, path("train.conll"));
    corpus::write_conll(c.test, path("cv.conll"));
    fs::create_directories(path("lex"));
    auto join = [](const auto& entries) {
      std::string s;
      for (const auto& e : entries) s += e + "\n";
      return s;
    };
    corpus::write_file(path("lex/methods.txt"), join(c.lexicon.methods()));
    corpus::write_file(path("lex/datasets.txt"), join(c.lexicon.datasets()));
    corpus::write_file(path("lex/blacklist.txt"), join(c.lexicon.blacklist()));
  }

  std::vector<std::string> train_args(const std::string& out, const std::string& history) {
    return {"train", "--train", path("train.conll"), "--cv", path("cv.conll"),
            "--lexicon-dir", path("lex"), "--out", out, "--history", history,
            "--debug-small", "--epochs", "2", "--seed", "5"};
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpListsEveryFlag) {
  const std::map<std::string, std::vector<std::string>> flags = {
      {"augment", {"--input", "--methods", "--datasets", "--out", "--seed", "--max-len"}},
      {"split", {"--input", "--out-dir", "--seed", "--max-len"}},
      {"train", {"--train", "--cv", "--lexicon-dir", "--out", "--history", "--batch-size",
                 "--epochs", "--patience", "--learning-rate", "--clip-norm", "--target-f1",
                 "--no-rule", "--no-cnn", "--debug-small", "--threads", "--seed", "--max-len"}},
      {"eval", {"--model", "--data", "--batch-size", "--threads"}},
      {"report", {"--model", "--data", "--batch-size", "--threads"}},
      {"label", {"--model", "--input", "--out", "--batch-size"}},
      {"mine", {"--model", "--corpus", "--out", "--alias-table", "--threads"}},
      {"graph", {"--corpus", "--model", "--mentions", "--out", "--min-weight", "--keep-isolated",
                 "--format", "--top-k", "--centrality-on", "--weighted", "--normalized",
                 "--alias-table", "--threads"}},
  };
  for (const auto& [sub, names] : flags) {
    const Outcome r = invoke({sub, "--help"});
    EXPECT_EQ(r.code, kOk) << sub;
    for (const auto& f : names) EXPECT_NE(r.out.find(f), std::string::npos) << sub << " " << f;
  }
  const Outcome top = invoke({"--help"});
  EXPECT_EQ(top.code, kOk);
  for (const auto& [sub, names] : flags) EXPECT_NE(top.out.find(sub), std::string::npos) << sub;
}

TEST_F(CliTest, ExitCodes) {
  EXPECT_EQ(invoke({}).code, kValidationError);
  EXPECT_EQ(invoke({"frobnicate"}).code, kValidationError);
  EXPECT_EQ(invoke({"split", "--input", path("missing.conll")}).code, kValidationError);
  EXPECT_EQ(invoke({"split", "--input", path("missing.conll"), "--out-dir", path("o")}).code,
            kValidationError);
  corpus::write_file(path("bad.conll"), "S\tB-M\nx\tQ\n\n");
  const Outcome bad = invoke({"eval", "--model", path("none.ckpt"), "--data", path("bad.conll")});
  EXPECT_EQ(bad.code, kValidationError);
  corpus::write_file(path("garbage.ckpt"), "not a checkpoint");
  corpus::write_file(path("ok.conll"), "a\tO\n\n");
  EXPECT_EQ(invoke({"eval", "--model", path("garbage.ckpt"), "--data", path("ok.conll")}).code,
            kValidationError);
  const auto c = testing::make_synthetic({.train_sentences = 8});
  corpus::write_conll(c.train, path("in.conll"));
  EXPECT_EQ(invoke({"split", "--input", path("in.conll"), "--out-dir", "/proc/forbidden"}).code,
            kRuntimeFailure);
}

TEST_F(CliTest, BinaryReportsExitStatus) {
  const std::string bin = MDER_CLI_PATH;
  EXPECT_EQ(std::system((bin + " --help > /dev/null").c_str()), 0);
  const int status = std::system((bin + " split --input /nonexistent > /dev/null 2>&1").c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), kValidationError);
}

TEST_F(CliTest, SplitAndAugmentPipeline) {
  const auto c = testing::make_synthetic({.train_sentences = 200, .seed = 3});
  corpus::write_conll(c.train, path("all.conll"));
  Outcome r = invoke({"split", "--input", path("all.conll"), "--out-dir", path("parts"), "--seed", "4"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out, "train\t150\ntest\t20\ncv\t30\n");
  EXPECT_NE(r.err.find("seed"), std::string::npos);
  EXPECT_EQ(corpus::read_conll(path("parts/train.conll")).size(), 150u);
  EXPECT_EQ(corpus::read_conll(path("parts/cv.conll")).size(), 30u);

  std::string pool;
  for (const auto& m : c.methods) pool += m + "\n";
  corpus::write_file(path("methods.txt"), pool);
  pool.clear();
  for (const auto& d : c.datasets) pool += d + "\n";
  corpus::write_file(path("datasets.txt"), pool);
  r = invoke({"augment", "--input", path("parts/train.conll"), "--methods", path("methods.txt"),
              "--datasets", path("datasets.txt"), "--out", path("aug.conll"), "--seed", "1"});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto augmented = corpus::read_conll(path("aug.conll"));
  EXPECT_GE(augmented.size(), 300u);
  EXPECT_EQ(r.out, std::to_string(augmented.size()) + "\n");
}

TEST_F(CliTest, TrainIsReproducibleAndEvalPrintsMetrics) {
  write_training_inputs(24);
  Outcome r = invoke(train_args(path("a.ckpt"), path("a.csv")));
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find("best_epoch\t"), std::string::npos);
  r = invoke(train_args(path("b.ckpt"), path("b.csv")));
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(corpus::read_file(path("a.ckpt")), corpus::read_file(path("b.ckpt")));
  EXPECT_EQ(corpus::read_file(path("a.csv")), corpus::read_file(path("b.csv")));
  EXPECT_EQ(corpus::read_file(path("a.csv")).rfind("epoch,train_loss,cv_precision,cv_recall,cv_f1\n", 0),
            0u);

  r = invoke({"eval", "--model", path("a.ckpt"), "--data", path("cv.conll")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out.rfind("precision\trecall\tf1\n", 0), 0u);
  EXPECT_NE(r.out.find("type\tprecision\trecall\tf1\tgold\tpredicted\tcorrect\n"), std::string::npos);
  const Outcome threaded =
      invoke({"eval", "--model", path("a.ckpt"), "--data", path("cv.conll"), "--threads", "3"});
  EXPECT_EQ(threaded.out, r.out);

  r = invoke({"report", "--model", "MDER=" + path("a.ckpt"), "--model", path("b.ckpt"), "--data",
              path("cv.conll")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out.rfind("Model\tAccuracy\tRecall\tF1-score\nMDER\t", 0), 0u);

  corpus::write_file(path("text.txt"), "We use SVM on MNIST .\n\nKNN\n");
  r = invoke({"label", "--model", path("a.ckpt"), "--input", path("text.txt")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(corpus::parse_conll(r.out, "stdout").size(), 2u);
}

TEST_F(CliTest, TrainRequiresLexiconUnlessRuleDisabled) {
  write_training_inputs(8);
  auto args = train_args(path("m.ckpt"), path("h.csv"));
  args.erase(args.begin() + 5, args.begin() + 7);
  EXPECT_EQ(invoke(args).code, kValidationError);
  args.push_back("--no-rule");
  const Outcome r = invoke(args);
  EXPECT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(invoke({"train", "--train", path("train.conll"), "--cv", path("cv.conll"),
                    "--no-rule", "--out", path("x.ckpt"), "--batch-size", "0"})
                .code,
            kValidationError);
}

TEST_F(CliTest, GraphFromMentions) {
  std::vector<miner::MentionRecord> m;
  auto add = [&](const std::string& doc, int year, const std::string& name) {
    m.push_back({doc, year, corpus::EntityType::Method, name, miner::canonicalize(name)});
  };
  for (int p = 0; p < 3; ++p) {
    add("a" + std::to_string(p), 2009, "SVM");
    add("a" + std::to_string(p), 2009, "KNN");
  }
  add("c0", 2009, "SVM");
  add("c0", 2009, "NB");
  add("b0", 2014, "PMF");
  corpus::write_file(path("m.csv"), miner::mentions_csv(m));

  Outcome r = invoke({"graph", "--mentions", path("m.csv"), "--out", path("g"), "--format",
                      "edge-csv"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out, "2009\t2 nodes\t1 edges\n2014\t0 nodes\t0 edges\n");
  EXPECT_EQ(corpus::read_file(path("g/2009.csv")), "year,src,dst,weight\n2009,knn,svm,3\n");
  EXPECT_EQ(corpus::read_file(path("g/2014.csv")), "year,src,dst,weight\n");
  EXPECT_EQ(corpus::read_file(path("g/rank.csv")),
            "year,rank,method,betweenness\n2009,1,svm,1\n2009,2,knn,0\n2009,3,nb,0\n"
            "2014,1,pmf,0\n");

  r = invoke({"graph", "--mentions", path("m.csv"), "--out", path("g2"), "--format", "dot",
              "--centrality-on", "filtered", "--min-weight", "0"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(path("g2/2009.dot")));
  EXPECT_EQ(invoke({"graph", "--mentions", path("m.csv"), "--out", path("g3"), "--format", "png"})
                .code,
            kValidationError);
  EXPECT_EQ(invoke({"graph", "--out", path("g4")}).code, kValidationError);
}

TEST_F(CliTest, MineAndGraphFromModel) {
  write_training_inputs(8);
  ASSERT_EQ(invoke(train_args(path("m.ckpt"), path("h.csv"))).code, kOk);
  const auto c = testing::make_synthetic({.train_sentences = 12, .seed = 21});
  std::vector<corpus::Document> docs;
  for (int i = 0; i < 4; ++i) {
    corpus::Document d{"p" + std::to_string(i), 2009 + i % 2, "venue", {}};
    for (int s = 0; s < 3; ++s) d.sentences.push_back(c.train[3 * i + s].chars);
    docs.push_back(d);
  }
  corpus::write_documents(docs, path("docs.jsonl"));
  Outcome r = invoke({"mine", "--model", path("m.ckpt"), "--corpus", path("docs.jsonl"),
                      "--out", path("mentions.csv")});
  ASSERT_EQ(r.code, kOk) << r.err;
  const auto mentions =
      miner::parse_mentions_csv(corpus::read_file(path("mentions.csv")), "mentions.csv");
  const Outcome threaded = invoke({"mine", "--model", path("m.ckpt"), "--corpus",
                                   path("docs.jsonl"), "--threads", "4"});
  EXPECT_EQ(threaded.out, corpus::read_file(path("mentions.csv")));

  r = invoke({"graph", "--model", path("m.ckpt"), "--corpus", path("docs.jsonl"), "--out",
              path("g")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_TRUE(fs::exists(path("g/rank.csv")));
  r = invoke({"graph", "--mentions", path("mentions.csv"), "--out", path("h")});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(corpus::read_file(path("g/rank.csv")), corpus::read_file(path("h/rank.csv")));
}

}  // namespace
}  // namespace mder::cli
