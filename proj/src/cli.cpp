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

#include "mder/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <thread>

#include "mder/checkpoint.hpp"
#include "mder/corpus.hpp"
#include "mder/error.hpp"
#include "mder/lexicon.hpp"
#include "mder/miner.hpp"
#include "mder/model.hpp"
#include "mder/training.hpp"
#include "mder/utf8.hpp"

namespace mder::cli {

namespace fs = std::filesystem;

namespace {

struct Options {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  std::size_t max_len = corpus::kDefaultMaxLen;
  std::size_t batch_size = 16;

  // augment
  std::string input;
  std::string methods_pool;
  std::string datasets_pool;
  std::string out;

  // split
  std::string out_dir;

  // train
  std::string train_path;
  std::string cv_path;
  std::string lexicon_dir;
  std::string history_path;
  bool no_rule = false;
  bool no_cnn = false;
  bool debug_small = false;
  std::size_t epochs = 100;
  std::size_t patience = 3;
  double learning_rate = 1e-3;
  double clip_norm = 5.0;
  std::optional<double> target_f1;

  // eval / label / mine / graph / report
  std::string model_path;
  std::vector<std::string> model_paths;
  std::string data_path;
  std::string corpus_path;
  std::string mentions_path;
  std::string alias_table;
  std::size_t min_weight = 2;
  std::size_t top_k = 10;
  bool keep_isolated = false;
  std::string format = "dot";
  std::string centrality_on = "full";
  bool weighted = false;
  bool normalized = false;
};

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::size_t worker_count(std::size_t requested) {
  if (requested == 0) throw ValidationError("--threads must be >= 1");
  return requested;
}

void add_common(CLI::App* sub, Options& o, bool with_seed) {
  if (with_seed) sub->add_option("--seed", o.seed, "Random seed")->capture_default_str();
  sub->add_option("--max-len", o.max_len, "Maximum sentence length in characters; longer input is truncated")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

model::Tagger load_model(const std::string& path) {
  return model::load_checkpoint(path);
}

int cmd_augment(const Options& o, std::ostream& out, std::ostream& err) {
  const auto sentences = corpus::read_conll(o.input, o.max_len);
  const auto methods = corpus::read_pool(o.methods_pool);
  const auto datasets = corpus::read_pool(o.datasets_pool);
  const auto augmented = corpus::augment(sentences, methods, datasets, o.seed, o.max_len);
  corpus::write_conll(augmented, o.out);
  err << "augmented " << sentences.size() << " -> " << augmented.size() << " sentences\n";
  out << augmented.size() << "\n";
  return kOk;
}

int cmd_split(const Options& o, std::ostream& out, std::ostream&) {
  const auto sentences = corpus::read_conll(o.input, o.max_len);
  const auto parts = corpus::split(sentences, corpus::SplitSpec{}, o.seed);
  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + o.out_dir + "': " + ec.message());
  corpus::write_conll(parts.train, fs::path(o.out_dir) / "train.conll");
  corpus::write_conll(parts.test, fs::path(o.out_dir) / "test.conll");
  corpus::write_conll(parts.cv, fs::path(o.out_dir) / "cv.conll");
  out << "train\t" << parts.train.size() << "\ntest\t" << parts.test.size() << "\ncv\t"
      << parts.cv.size() << "\n";
  return kOk;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  model::MderConfig mc = o.debug_small ? model::MderConfig::debug_small() : model::MderConfig::full();
  mc.use_rule = !o.no_rule;
  mc.use_cnn = !o.no_cnn;
  mc.max_len = o.max_len;
  mc.validate();

  lexicon::Lexicon lex;
  if (!o.lexicon_dir.empty()) {
    lex = lexicon::load_lexicon_dir(o.lexicon_dir);
  } else if (mc.use_rule) {
    throw ValidationError("--lexicon-dir is required unless --no-rule is given");
  }

  train::TrainConfig tc;
  tc.batch_size = o.batch_size;
  tc.max_epochs = o.epochs;
  tc.patience = o.patience;
  tc.learning_rate = o.learning_rate;
  tc.clip_norm = o.clip_norm;
  tc.target_f1 = o.target_f1;
  tc.seed = o.seed;
  tc.validate();

  const auto train_set = corpus::read_conll(o.train_path, o.max_len);
  const auto cv_set = corpus::read_conll(o.cv_path, o.max_len);
  const auto result = train::train(mc, tc, train_set, cv_set, lex, [&](const train::EpochRecord& r) {
    err << "epoch " << r.epoch << " loss " << fixed(r.train_loss, 4) << " cv_f1 "
        << fixed(r.cv_f1, 4) << "\n";
  });
  model::save_checkpoint(result.tagger, o.out);
  if (!o.history_path.empty()) {
    corpus::write_file(o.history_path, train::history_csv(result.history));
  }
  out << "best_epoch\t" << result.best_epoch << "\n";
  return kOk;
}

void print_metrics(const train::Metrics& m, std::ostream& out) {
  out << "precision\trecall\tf1\n"
      << fixed(m.precision, 4) << "\t" << fixed(m.recall, 4) << "\t" << fixed(m.f1, 4) << "\n";
  const auto row = [&](const char* name, const train::Counts& c) {
    const double p = train::precision(c), r = train::recall(c);
    out << name << "\t" << fixed(p, 4) << "\t" << fixed(r, 4) << "\t" << fixed(train::f1(p, r), 4)
        << "\t" << c.gold << "\t" << c.predicted << "\t" << c.correct << "\n";
  };
  out << "type\tprecision\trecall\tf1\tgold\tpredicted\tcorrect\n";
  row("M", m.method);
  row("D", m.dataset);
}

int cmd_eval(const Options& o, std::ostream& out, std::ostream&) {
  const auto tagger = load_model(o.model_path);
  const auto data = corpus::read_conll(o.data_path, tagger.config.max_len);
  print_metrics(train::evaluate(tagger, data, worker_count(o.threads), o.batch_size), out);
  return kOk;
}

int cmd_report(const Options& o, std::ostream& out, std::ostream&) {
  if (o.model_paths.empty()) throw ValidationError("report needs at least one --model");
  std::vector<std::pair<std::string, train::Metrics>> rows;
  for (const auto& spec : o.model_paths) {
    std::string label, path = spec;
    if (const auto eq = spec.find('='); eq != std::string::npos) {
      label = spec.substr(0, eq);
      path = spec.substr(eq + 1);
    } else {
      label = fs::path(spec).stem().string();
    }
    const auto tagger = load_model(path);
    const auto data = corpus::read_conll(o.data_path, tagger.config.max_len);
    rows.emplace_back(label, train::evaluate(tagger, data, worker_count(o.threads), o.batch_size));
  }
  out << "Model\tAccuracy\tRecall\tF1-score\n";
  for (const auto& [label, m] : rows) {
    out << label << "\t" << fixed(m.precision, 3) << "\t" << fixed(m.recall, 3) << "\t"
        << fixed(m.f1, 3) << "\n";
  }
  return kOk;
}

int cmd_label(const Options& o, std::ostream& out, std::ostream&) {
  const auto tagger = load_model(o.model_path);
  const std::string content = corpus::read_file(o.input);
  std::vector<std::u32string> texts;
  std::istringstream lines(content);
  for (std::string line; std::getline(lines, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto chars = utf8::normalize_controls(utf8::decode(line));
    if (chars.size() > tagger.config.max_len) chars.resize(tagger.config.max_len);
    if (chars.empty()) continue;
    texts.push_back(std::move(chars));
  }
  const auto tags = tagger.predict(texts, o.batch_size);
  std::vector<corpus::LabeledSentence> labeled;
  for (std::size_t i = 0; i < texts.size(); ++i) {
    labeled.push_back({texts[i], tags[i], std::nullopt});
  }
  if (o.out.empty()) {
    out << corpus::format_conll(labeled);
  } else {
    corpus::write_conll(labeled, o.out);
  }
  return kOk;
}

std::vector<miner::MentionRecord> mentions_from_model(const Options& o) {
  const auto tagger = load_model(o.model_path);
  const auto docs = corpus::read_documents(o.corpus_path);
  std::optional<miner::AliasTable> aliases;
  if (!o.alias_table.empty()) aliases = miner::read_alias_table(o.alias_table);
  return miner::predict_corpus(tagger, docs, worker_count(o.threads),
                               aliases ? &*aliases : nullptr);
}

int cmd_mine(const Options& o, std::ostream& out, std::ostream& err) {
  const auto mentions = mentions_from_model(o);
  const std::string csv = miner::mentions_csv(mentions);
  if (o.out.empty()) {
    out << csv;
  } else {
    corpus::write_file(o.out, csv);
  }
  err << mentions.size() << " mentions\n";
  return kOk;
}

int cmd_graph(const Options& o, std::ostream& out, std::ostream& err) {
  const auto format = miner::parse_format(o.format);
  if (format == miner::ExportFormat::RankCsv) {
    throw ValidationError("--format selects the per-year graph format; rank.csv is always written");
  }
  if (o.centrality_on != "full" && o.centrality_on != "filtered") {
    throw ValidationError("--centrality-on must be 'full' or 'filtered'");
  }
  if (o.top_k == 0) throw ValidationError("--top-k must be >= 1");

  std::vector<miner::MentionRecord> mentions;
  if (!o.mentions_path.empty()) {
    if (!o.alias_table.empty()) {
      throw ValidationError("--alias-table applies when tagging; re-run mine with it instead");
    }
    mentions = miner::parse_mentions_csv(corpus::read_file(o.mentions_path), o.mentions_path);
  } else {
    if (o.corpus_path.empty() || o.model_path.empty()) {
      throw ValidationError("graph needs --mentions, or both --corpus and --model");
    }
    mentions = mentions_from_model(o);
  }

  std::error_code ec;
  fs::create_directories(o.out_dir, ec);
  if (ec) throw RuntimeFailure("cannot create '" + o.out_dir + "': " + ec.message());

  const miner::CentralityOptions copt{o.weighted, o.normalized};
  std::map<int, std::vector<miner::RankedNode>> rankings;
  for (const auto& [year, graph] : miner::build_graphs(mentions)) {
    const auto filtered = miner::filter_edges(graph, o.min_weight, o.keep_isolated);
    const std::string stem = std::to_string(year);
    miner::export_graph(filtered, format,
                        fs::path(o.out_dir) / (stem + std::string(miner::format_extension(format))));
    const auto& basis = o.centrality_on == "full" ? graph : filtered;
    rankings[year] = miner::top_k(miner::betweenness(basis, copt), o.top_k);
    out << year << "\t" << filtered.nodes.size() << " nodes\t" << filtered.edges.size()
        << " edges\n";
  }
  miner::export_rankings(rankings, fs::path(o.out_dir) / "rank.csv");
  err << "wrote " << rankings.size() << " year(s) to " << o.out_dir << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Method and dataset entity tagging and co-occurrence mining", "mder"};
  app.set_config("--config", "", "INI/TOML file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  app.fallthrough(false);

  auto* augment = app.add_subcommand("augment", "Two-stage entity substitution over a CoNLL file");
  augment->add_option("--input", o.input, "Input CoNLL file")->required();
  augment->add_option("--methods", o.methods_pool, "Method name pool, one per line")->required();
  augment->add_option("--datasets", o.datasets_pool, "Dataset name pool, one per line")->required();
  augment->add_option("--out", o.out, "Output CoNLL file")->required();
  add_common(augment, o, true);

  auto* split = app.add_subcommand("split", "Seeded 7.5:1:1.5 train/test/cv split");
  split->add_option("--input", o.input, "Input CoNLL file")->required();
  split->add_option("--out-dir", o.out_dir, "Directory for train.conll, test.conll, cv.conll")->required();
  add_common(split, o, true);

  auto* train = app.add_subcommand("train", "Train a tagger and write a checkpoint");
  train->add_option("--train", o.train_path, "Training CoNLL file")->required();
  train->add_option("--cv", o.cv_path, "Validation CoNLL file used for early stopping")->required();
  train->add_option("--lexicon-dir", o.lexicon_dir,
                    "Directory with methods.txt, datasets.txt, blacklist.txt");
  train->add_option("--out", o.out, "Checkpoint path")->required();
  train->add_option("--history", o.history_path, "Per-epoch history CSV path");
  train->add_option("--batch-size", o.batch_size, "Sentences per mini-batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--epochs", o.epochs, "Maximum number of epochs")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--patience", o.patience, "Epochs without validation F1 gain before stopping")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  train->add_option("--learning-rate", o.learning_rate, "Adam step size")->capture_default_str();
  train->add_option("--clip-norm", o.clip_norm, "Global gradient norm limit")->capture_default_str();
  train->add_option("--target-f1", o.target_f1, "Stop once validation F1 reaches this value");
  train->add_flag("--no-rule", o.no_rule, "Disable the rule embedding");
  train->add_flag("--no-cnn", o.no_cnn, "Disable the CNN branch");
  train->add_flag("--debug-small", o.debug_small, "Use all widths divided by 8");
  train->add_option("--threads", o.threads, "Accepted for symmetry; training is single-threaded")
      ->capture_default_str();
  add_common(train, o, true);

  auto* eval = app.add_subcommand("eval", "Entity-level precision, recall and F1 on a CoNLL file");
  eval->add_option("--model", o.model_path, "Checkpoint path")->required();
  eval->add_option("--data", o.data_path, "Gold CoNLL file")->required();
  eval->add_option("--batch-size", o.batch_size, "Sentences per decoding batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  eval->add_option("--threads", o.threads, "Worker threads")->capture_default_str();

  auto* report = app.add_subcommand("report", "Score several checkpoints on one CoNLL file as a table");
  report->add_option("--model", o.model_paths, "Checkpoint path, optionally LABEL=PATH; repeatable")
      ->required();
  report->add_option("--data", o.data_path, "Gold CoNLL file")->required();
  report->add_option("--batch-size", o.batch_size, "Sentences per decoding batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  report->add_option("--threads", o.threads, "Worker threads")->capture_default_str();

  auto* label = app.add_subcommand("label", "Tag plain-text lines and print CoNLL");
  label->add_option("--model", o.model_path, "Checkpoint path")->required();
  label->add_option("--input", o.input, "Text file, one sentence per line")->required();
  label->add_option("--out", o.out, "Output CoNLL file (default: standard output)");
  label->add_option("--batch-size", o.batch_size, "Sentences per decoding batch")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);

  auto* mine = app.add_subcommand("mine", "Extract method and dataset mentions from a JSONL corpus");
  mine->add_option("--model", o.model_path, "Checkpoint path")->required();
  mine->add_option("--corpus", o.corpus_path, "JSONL document corpus")->required();
  mine->add_option("--out", o.out, "Mentions CSV (default: standard output)");
  mine->add_option("--alias-table", o.alias_table, "CSV of from,to canonical name aliases");
  mine->add_option("--threads", o.threads, "Documents tagged in parallel")->capture_default_str();

  auto* graph = app.add_subcommand("graph", "Per-year method co-occurrence graphs and betweenness ranks");
  graph->add_option("--corpus", o.corpus_path, "JSONL document corpus (with --model)");
  graph->add_option("--model", o.model_path, "Checkpoint path (with --corpus)");
  graph->add_option("--mentions", o.mentions_path, "Mentions CSV from 'mine' instead of tagging");
  graph->add_option("--out", o.out_dir, "Output directory")->required();
  graph->add_option("--min-weight", o.min_weight, "Keep edges with weight strictly greater than this")
      ->capture_default_str();
  graph->add_flag("--keep-isolated", o.keep_isolated, "Keep nodes that lose all edges to filtering");
  graph->add_option("--format", o.format, "Graph file format: dot, graphml or edge-csv")
      ->capture_default_str();
  graph->add_option("--top-k", o.top_k, "Methods per year in rank.csv")->capture_default_str();
  graph->add_option("--centrality-on", o.centrality_on,
                    "Compute betweenness on the 'full' or 'filtered' graph")
      ->capture_default_str();
  graph->add_flag("--weighted", o.weighted, "Use 1/weight as shortest-path edge length");
  graph->add_flag("--normalized", o.normalized, "Divide betweenness by (n-1)(n-2)/2");
  graph->add_option("--alias-table", o.alias_table, "CSV of from,to canonical name aliases");
  graph->add_option("--threads", o.threads, "Documents tagged in parallel")->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kValidationError;
  }

  CLI::App* chosen = app.get_subcommands().front();
  err << "# resolved configuration\n" << chosen->config_to_str(true, false);

  try {
    const std::string name = chosen->get_name();
    if (name == "augment") return cmd_augment(o, out, err);
    if (name == "split") return cmd_split(o, out, err);
    if (name == "train") return cmd_train(o, out, err);
    if (name == "eval") return cmd_eval(o, out, err);
    if (name == "report") return cmd_report(o, out, err);
    if (name == "label") return cmd_label(o, out, err);
    if (name == "mine") return cmd_mine(o, out, err);
    if (name == "graph") return cmd_graph(o, out, err);
    err << "error: unknown subcommand " << name << "\n";
    return kValidationError;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const ShapeError& e) {
    err << "error: " << e.what() << "\n";
    return kValidationError;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kRuntimeFailure;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace mder::cli
