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

#include <cmath>

#include "mder/error.hpp"
#include "mder/metrics.hpp"
#include "mder/model.hpp"
#include "mder/training.hpp"
#include "synthetic.hpp"

namespace mder::train {
namespace {

using corpus::EntitySpan;
using corpus::EntityType;
using corpus::Tag;

model::MderConfig tiny_config() {
  model::MderConfig c;
  c.char_emb_dim = 8;
  c.rule_emb_dim = 4;
  c.lstm_hidden = 6;
  c.cnn_filters = 3;
  c.attn_out = 8;
  return c;
}

TEST(Spans, Examples) {
  const std::vector<Tag> a = {Tag::BM, Tag::IM, Tag::IM, Tag::O};
  EXPECT_EQ(extract_spans(a), (std::vector<EntitySpan>{{EntityType::Method, 0, 3}}));
  const std::vector<Tag> b = {Tag::O, Tag::O};
  EXPECT_TRUE(extract_spans(b).empty());
  const std::vector<Tag> c = {Tag::BM, Tag::BD, Tag::ID};
  EXPECT_EQ(extract_spans(c), (std::vector<EntitySpan>{{EntityType::Method, 0, 1},
                                                       {EntityType::Dataset, 1, 3}}));
  const std::vector<Tag> bad = {Tag::BM, Tag::ID};
  EXPECT_THROW(extract_spans(bad), ValidationError);
}

TEST(Metrics, PartialMatch) {
  MetricsAccumulator acc;
  const std::vector<EntitySpan> gold = {{EntityType::Method, 0, 3}, {EntityType::Dataset, 10, 16}};
  const std::vector<EntitySpan> pred = {{EntityType::Method, 0, 3}};
  acc.add_spans(gold, pred);
  const auto m = acc.result();
  EXPECT_DOUBLE_EQ(m.precision, 1.0);
  EXPECT_DOUBLE_EQ(m.recall, 0.5);
  EXPECT_NEAR(m.f1, 2.0 / 3.0, 1e-12);
  EXPECT_EQ(m.method, (Counts{1, 1, 1}));
  EXPECT_EQ(m.dataset, (Counts{1, 0, 0}));
}

TEST(Metrics, ExactPredictionIsPerfect) {
  const auto s = testing::markup("[M SVM] on [D MNIST] and [D Cora] .");
  MetricsAccumulator acc;
  acc.add(s.tags, s.tags);
  const auto m = acc.result();
  EXPECT_EQ(m.precision, 1.0);
  EXPECT_EQ(m.recall, 1.0);
  EXPECT_EQ(m.f1, 1.0);
  EXPECT_EQ(m.characters.correct, m.characters.gold);
}

TEST(Metrics, BoundaryOrTypeMismatchIsWrong) {
  const auto gold = testing::markup("[M SVM] x");
  auto shifted = gold;
  shifted.tags[2] = Tag::O;
  auto retyped = gold;
  retyped.tags = {Tag::BD, Tag::ID, Tag::ID, Tag::O, Tag::O};
  MetricsAccumulator acc;
  acc.add(gold.tags, shifted.tags);
  acc.add(gold.tags, retyped.tags);
  EXPECT_EQ(acc.result().spans.correct, 0u);
  EXPECT_EQ(acc.result().spans.predicted, 2u);
}

TEST(Metrics, TableAnchorArithmetic) {
  // 906 correct out of 1000 predicted and 1145 gold spans.
  const Counts c{1145, 1000, 906};
  EXPECT_NEAR(precision(c), 0.906, 1e-12);
  EXPECT_NEAR(recall(c), 0.791, 5e-4);
  const auto m = Metrics::from_counts(c, {});
  EXPECT_NEAR(m.f1, 0.845, 5e-4);
  EXPECT_EQ(f1(0.0, 0.0), 0.0);
  EXPECT_NEAR(f1(0.906, 0.791), 0.845, 5e-4);
}

TEST(Metrics, EmptyCountsAreZero) {
  const auto m = MetricsAccumulator{}.result();
  EXPECT_EQ(m.precision, 0.0);
  EXPECT_EQ(m.recall, 0.0);
  EXPECT_EQ(m.f1, 0.0);
}

TEST(Adam, MinimizesAQuadratic) {
  num::Tensor x({3}, std::vector<double>{2.0, -3.0, 0.5});
  TrainConfig cfg;
  cfg.learning_rate = 0.05;
  Adam adam({&x}, cfg);
  for (int i = 0; i < 2000; ++i) {
    std::vector<num::Tensor> g = {x};
    for (double& v : g[0].data()) v *= 2.0;
    adam.step(g);
  }
  for (double v : x.data()) EXPECT_NEAR(v, 0.0, 1e-2);
}

TEST(Adam, ClipsTheGlobalNorm) {
  num::Tensor x({2}, 0.0);
  TrainConfig cfg;
  cfg.clip_norm = 1.0;
  Adam adam({&x}, cfg);
  std::vector<num::Tensor> g = {num::Tensor({2}, std::vector<double>{30.0, 40.0})};
  EXPECT_DOUBLE_EQ(adam.step(g), 50.0);
  // First Adam step moves each coordinate by about the learning rate.
  EXPECT_NEAR(x[0], -1e-3, 1e-9);
}

TEST(TrainConfig, Validation) {
  TrainConfig c;
  c.batch_size = 0;
  EXPECT_THROW(c.validate(), ValidationError);
  c = {};
  c.patience = 0;
  EXPECT_THROW(c.validate(), ValidationError);
}

TEST(History, CsvFormat) {
  const std::vector<EpochRecord> h = {{1, 12.5, 0.25, 0.5, 1.0 / 3.0}};
  EXPECT_EQ(history_csv(h),
            "epoch,train_loss,cv_precision,cv_recall,cv_f1\n1,12.5,0.25,0.5,0.3333333333333333\n");
}

TEST(Training, InitialLossIsNearUniformPathCount) {
  const auto corpus = testing::make_synthetic({.train_sentences = 32, .seed = 3});
  const auto cfg = tiny_config();
  const auto vocab = corpus::build_vocab(corpus.train);
  const auto params = model::init_params(cfg, vocab.size(), 1);
  std::vector<const corpus::LabeledSentence*> ptrs;
  double mean_len = 0.0;
  for (const auto& s : corpus.train) {
    ptrs.push_back(&s);
    mean_len += static_cast<double>(s.chars.size()) / corpus.train.size();
  }
  const auto batch = model::make_batch(ptrs, vocab, corpus.lexicon, cfg.max_len);
  num::Tape tape;
  const double loss = model::loss(model::bind(tape, params, false), batch, cfg).value()[0];
  const double uniform = mean_len * std::log(5.0);
  EXPECT_NEAR(loss, uniform, 0.2 * uniform);
}

TEST(Training, AppendedPaddingIsNeutral) {
  const auto corpus = testing::make_synthetic({.train_sentences = 4, .seed = 5});
  const auto cfg = tiny_config();
  const auto vocab = corpus::build_vocab(corpus.train);
  const auto params = model::init_params(cfg, vocab.size(), 2);
  std::vector<const corpus::LabeledSentence*> ptrs;
  for (const auto& s : corpus.train) ptrs.push_back(&s);
  const auto batch = model::make_batch(ptrs, vocab, corpus.lexicon, cfg.max_len);
  model::Batch padded = batch;
  const std::size_t extra = 7, T = batch.steps + extra;
  padded.steps = T;
  const auto widen = [&](const auto& v, auto fill) {
    std::decay_t<decltype(v)> out(batch.batch_size * T, fill);
    for (std::size_t b = 0; b < batch.batch_size; ++b) {
      std::copy_n(v.begin() + b * batch.steps, batch.steps, out.begin() + b * T);
    }
    return out;
  };
  padded.char_ids = widen(batch.char_ids, std::size_t{0});
  padded.rule_ids = widen(batch.rule_ids, std::size_t{5});
  padded.mask = widen(batch.mask, std::uint8_t{0});
  padded.gold = widen(batch.gold, std::size_t{4});
  num::Tape t1, t2;
  const double a = model::loss(model::bind(t1, params, false), batch, cfg).value()[0];
  const double b = model::loss(model::bind(t2, params, false), padded, cfg).value()[0];
  EXPECT_NEAR(a, b, 1e-10);
}

TEST(Training, DeterministicAndReturnsBestEpoch) {
  const auto corpus = testing::make_synthetic({.train_sentences = 24, .test_sentences = 8, .seed = 7});
  TrainConfig tc;
  tc.max_epochs = 4;
  tc.patience = 10;
  tc.seed = 11;
  tc.learning_rate = 0.01;
  const auto a = train(tiny_config(), tc, corpus.train, corpus.test, corpus.lexicon);
  const auto b = train(tiny_config(), tc, corpus.train, corpus.test, corpus.lexicon);
  EXPECT_EQ(a.history, b.history);
  EXPECT_EQ(a.tagger.params, b.tagger.params);
  EXPECT_EQ(history_csv(a.history), history_csv(b.history));
  ASSERT_EQ(a.history.size(), 4u);
  double best = 0.0;
  for (const auto& r : a.history) best = std::max(best, r.cv_f1);
  EXPECT_EQ(a.history[a.best_epoch - 1].cv_f1, best);
  EXPECT_EQ(evaluate(a.tagger, corpus.test).f1, best);

  tc.seed = 12;
  EXPECT_NE(train(tiny_config(), tc, corpus.train, corpus.test, corpus.lexicon).history, a.history);
}

TEST(Training, StopsAfterPatienceRunsOut) {
  const auto corpus = testing::make_synthetic({.train_sentences = 8, .test_sentences = 4, .seed = 9});
  TrainConfig tc;
  tc.max_epochs = 50;
  tc.patience = 1;
  tc.learning_rate = 1e-7;  // CV F1 cannot move
  const auto r = train(tiny_config(), tc, corpus.train, corpus.test, corpus.lexicon);
  EXPECT_EQ(r.history.size(), 2u);
  EXPECT_EQ(r.best_epoch, 1u);
}

TEST(Training, RejectsEmptySplits) {
  const auto corpus = testing::make_synthetic({.train_sentences = 4, .seed = 1});
  EXPECT_THROW(train(tiny_config(), {}, corpus.train, {}, corpus.lexicon), ValidationError);
  EXPECT_THROW(train(tiny_config(), {}, {}, corpus.train, corpus.lexicon), ValidationError);
}

TEST(Evaluate, ThreadCountDoesNotChangeResults) {
  const auto corpus = testing::make_synthetic({.train_sentences = 16, .test_sentences = 21, .seed = 13});
  TrainConfig tc;
  tc.max_epochs = 2;
  tc.learning_rate = 0.01;
  const auto r = train(tiny_config(), tc, corpus.train, corpus.train, corpus.lexicon);
  const auto one = evaluate(r.tagger, corpus.test, 1);
  for (std::size_t threads : {2u, 3u, 8u}) {
    const auto m = evaluate(r.tagger, corpus.test, threads);
    EXPECT_EQ(m.spans, one.spans);
    EXPECT_EQ(m.characters, one.characters);
    EXPECT_EQ(m.f1, one.f1);
  }
  EXPECT_THROW(evaluate(r.tagger, {}), ValidationError);
}

}  // namespace
}  // namespace mder::train
