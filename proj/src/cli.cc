// Copyright 2026 The twsent Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "twsent/cli.h"

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <vector>

#include "CLI11.hpp"
#include "twsent/classifier.h"
#include "twsent/errors.h"
#include "twsent/textproc.h"

namespace twsent::cli {

namespace {

namespace fs = std::filesystem;
using training::ExperimentConfig;

constexpr std::array<const char*, 7> kRunKeys = {
    "train_path", "dev_path", "test_path", "data_path", "out_dir", "precision", "folds"};

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = [] {
    KeyValueConfig kv;
    ExperimentConfig().write(kv);
    datasets::SchemaDescriptor().write(kv);
    std::set<std::string> k(kv.keys().begin(), kv.keys().end());
    k.insert(kRunKeys.begin(), kRunKeys.end());
    return k;
  }();
  return keys;
}

void require_file(const std::string& key, const std::string& path) {
  if (!path.empty() && !fs::exists(path)) throw ConfigError(key + ": no such file '" + path + "'");
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  f << content;
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", p);
  return buf;
}

std::optional<bool> on_off(const std::string& flag) {
  if (flag.empty()) return std::nullopt;
  return flag == "on";
}

void write_rule_report(std::ostream& os, const std::array<std::size_t, textproc::kNumRules>& fired,
                       std::size_t processed, std::size_t total, std::size_t degenerate) {
  os << "rule\ttweets\n";
  for (std::size_t r = 0; r < textproc::kNumRules; ++r) {
    os << textproc::rule_name(static_cast<textproc::Rule>(r)) << '\t' << fired[r] << '\n';
  }
  os << "processed\t" << processed << '\n'
     << "total\t" << total << '\n'
     << "degenerate\t" << degenerate << '\n';
}

// --- commands ---

int cmd_preprocess(const std::string& input, const std::string& output, const std::string& config,
                   const Overrides& ov, bool normalize, std::ostream& out, std::ostream& err) {
  const RunConfig rc = resolve(config, ov);
  const auto lexicons = training::load_lexicons(rc.experiment.lexicons);
  const auto& pipeline = rc.experiment.pipeline;
  const datasets::Dataset d = datasets::load_tsv(input, rc.schema);

  datasets::Dataset result;
  result.name = d.name;
  result.num_classes = d.num_classes;
  std::array<std::size_t, textproc::kNumRules> fired{};
  std::size_t processed = 0, degenerate = 0;
  for (const auto& tweet : d.examples) {
    textproc::RawTweet t{tweet.text, tweet.label};
    std::vector<textproc::Rule> applied;
    if (normalize) {
      try {
        auto p = textproc::preprocess(tweet, pipeline, lexicons);
        t.text = std::move(p.text);
        applied = std::move(p.applied_rules);
      } catch (const DegenerateTweet&) {
        ++degenerate;
        continue;
      }
    } else if (pipeline.apply_rules) {
      auto r = textproc::apply_semantic_rules(tweet.text, lexicons);
      t.text = std::move(r.text);
      applied = std::move(r.applied_rules);
    }
    if (trim(t.text).empty()) {
      ++degenerate;
      continue;
    }
    for (auto rule : applied) ++fired[static_cast<std::size_t>(rule)];
    if (!applied.empty()) ++processed;
    result.examples.push_back(std::move(t));
  }

  const bool to_stdout = output.empty() || output == "-";
  if (to_stdout) {
    out << datasets::serialize_tsv(result);
  } else {
    datasets::save_tsv(output, result);
  }
  write_rule_report(to_stdout ? err : out, fired, processed, d.size(), degenerate);
  return kOk;
}

int cmd_stats(const std::vector<std::string>& inputs, const std::string& config,
              const Overrides& ov, std::ostream& out) {
  const RunConfig rc = resolve(config, ov);
  const auto lexicons = training::load_lexicons(rc.experiment.lexicons);
  bool header = true;
  for (const auto& path : inputs) {
    const auto d = datasets::load_tsv(path, rc.schema);
    const auto stats = datasets::compute_stats(d, rc.experiment.pipeline.apply_rules, lexicons,
                                               rc.experiment.pipeline.normalize);
    std::string table = datasets::format_stats(path, stats);
    if (!header) table.erase(0, table.find('\n') + 1);
    out << table;
    header = false;
  }
  return kOk;
}

int cmd_train(const std::string& config, const Overrides& ov, std::ostream& out,
              std::ostream& err) {
  const RunConfig rc = resolve(config, ov);
  if (rc.train_path.empty()) throw ConfigError("train_path is required");
  if (rc.out_dir.empty()) throw ConfigError("out_dir is required (--out)");
  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_file(dir / "resolved.conf", rc.to_config().serialize());

  datasets::Dataset train_set = datasets::load_tsv(rc.train_path, rc.schema);
  datasets::Dataset dev_set;
  if (rc.dev_path.empty()) {
    std::tie(train_set, dev_set) =
        datasets::split_dev(train_set, rc.experiment.dev_fraction, rc.experiment.train.seed);
  } else {
    dev_set = datasets::load_tsv(rc.dev_path, rc.schema);
  }
  err << "training on " << train_set.size() << " examples, " << dev_set.size() << " dev\n";

  training::FitResult fit = training::fit(rc.experiment, train_set, dev_set);
  fit.report.best_checkpoint = (dir / "model.twnt").string();
  model::save_checkpoint(fit.report.best_checkpoint, fit.classifier);
  write_file(dir / "report.tsv", fit.report.serialize());

  KeyValueConfig metrics;
  metrics.set("best_epoch", std::to_string(fit.report.best_epoch));
  metrics.set("best_dev_accuracy", format_double(fit.report.best_dev_accuracy));
  metrics.set("epochs_run", std::to_string(fit.report.epochs.size()));
  metrics.set("train_size", std::to_string(train_set.size()));
  metrics.set("dev_size", std::to_string(dev_set.size()));
  metrics.set("degenerate_dropped", std::to_string(fit.dropped));
  metrics.set("embedding_coverage", format_double(fit.embedding_coverage));
  if (!rc.test_path.empty()) {
    const auto& c = fit.classifier;
    const auto test_set = datasets::load_tsv(rc.test_path, rc.schema);
    const auto corpus = training::prepare_corpus(test_set, c.pipeline, c.lexicons);
    const auto e = training::evaluate(c.params, training::index_examples(c, corpus),
                                      rc.experiment.train.eval_threads);
    metrics.set("test_accuracy", format_double(e.accuracy));
    metrics.set("test_correct", std::to_string(e.correct));
    metrics.set("test_total", std::to_string(e.total));
    metrics.set("test_degenerate", std::to_string(corpus.degenerate));
  }
  write_file(dir / "metrics.txt", metrics.serialize());
  out << metrics.serialize();
  return kOk;
}

int cmd_cv(const std::string& config, const Overrides& ov, std::optional<std::size_t> k,
           std::ostream& out) {
  RunConfig rc = resolve(config, ov);
  if (k) rc.folds = *k;
  const std::string& path = rc.data_path.empty() ? rc.train_path : rc.data_path;
  if (path.empty()) throw ConfigError("data_path (or train_path) is required");
  const auto d = datasets::load_tsv(path, rc.schema);
  const auto report = training::cross_validate(d, rc.folds, rc.experiment);
  const std::string table = report.serialize();
  if (!rc.out_dir.empty()) {
    const fs::path dir(rc.out_dir);
    fs::create_directories(dir);
    write_file(dir / "resolved.conf", rc.to_config().serialize());
    write_file(dir / "cv.tsv", table);
  }
  out << table;
  return kOk;
}

int cmd_eval(const std::string& model_path, const std::string& data_path,
             const std::string& config, std::size_t threads, const std::string& out_dir,
             std::ostream& out) {
  const RunConfig rc = resolve(config, {});
  const model::Classifier c = model::load_checkpoint(model_path);
  const auto d = datasets::load_tsv(data_path, rc.schema);
  const auto corpus = training::prepare_corpus(d, c.pipeline, c.lexicons);
  const auto e =
      training::evaluate(c.params, training::index_examples(c, corpus), std::max<std::size_t>(1, threads));
  const std::string text =
      training::format_evaluation(e) + "degenerate = " + std::to_string(corpus.degenerate) + '\n';
  if (!out_dir.empty()) {
    fs::create_directories(out_dir);
    write_file(fs::path(out_dir) / "metrics.txt", text);
  }
  out << text;
  return kOk;
}

int cmd_predict(const std::string& model_path, const std::vector<std::string>& texts,
                const std::string& file, std::ostream& out, std::ostream& err) {
  const model::Classifier c = model::load_checkpoint(model_path);
  std::vector<std::string> lines = texts;
  if (!file.empty()) {
    std::ifstream f;
    std::istream* in = &std::cin;
    if (file != "-") {
      f.open(file);
      if (!f) throw ConfigError("cannot open " + file);
      in = &f;
    }
    for (std::string line; std::getline(*in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
    }
  }
  std::size_t empty = 0, degenerate = 0;
  for (const auto& line : lines) {
    if (trim(line).empty()) {
      ++empty;
      continue;
    }
    std::vector<double> probs;
    try {
      probs = c.predict_text(line);
    } catch (const DegenerateTweet&) {
      ++degenerate;
      continue;
    }
    const std::size_t label = model::argmax(probs);
    out << label << '\t' << format_probability(probs[label]) << '\t' << line << '\n';
  }
  if (empty) err << "warning: skipped " << empty << " empty line(s)\n";
  if (degenerate) err << "warning: skipped " << degenerate << " line(s) with no content left\n";
  return kOk;
}

}  // namespace

void RunConfig::validate() const {
  if (precision != "f64") {
    throw ConfigError("precision = " + precision + " is not supported, only f64");
  }
  if (folds < 2) throw ConfigError("folds must be at least 2");
  experiment.validate();
  require_file("train_path", train_path);
  require_file("dev_path", dev_path);
  require_file("test_path", test_path);
  require_file("data_path", data_path);
  require_file("vectors_path", experiment.vectors_path);
  require_file("emoticons_path", experiment.lexicons.emoticons);
  require_file("negative_cues_path", experiment.lexicons.negative_cues);
  require_file("stop_words_path", experiment.lexicons.stop_words);
}

KeyValueConfig RunConfig::to_config() const {
  KeyValueConfig kv;
  kv.set("train_path", train_path);
  kv.set("dev_path", dev_path);
  kv.set("test_path", test_path);
  kv.set("data_path", data_path);
  kv.set("out_dir", out_dir);
  kv.set("precision", precision);
  kv.set("folds", std::to_string(folds));
  experiment.write(kv);
  schema.write(kv);
  return kv;
}

RunConfig RunConfig::from_config(const KeyValueConfig& kv) {
  for (const auto& key : kv.keys()) {
    if (!known_keys().count(key)) throw ConfigError("unknown config key '" + key + "'");
  }
  RunConfig c;
  c.experiment = ExperimentConfig::read(kv);
  c.schema = datasets::SchemaDescriptor::from_config(kv);
  c.train_path = kv.get_string("train_path", "");
  c.dev_path = kv.get_string("dev_path", "");
  c.test_path = kv.get_string("test_path", "");
  c.data_path = kv.get_string("data_path", "");
  c.out_dir = kv.get_string("out_dir", "");
  c.precision = kv.get_string("precision", c.precision);
  const long folds = kv.get_int("folds", static_cast<long>(c.folds));
  if (folds < 2) throw ConfigError("folds must be at least 2");
  c.folds = static_cast<std::size_t>(folds);
  return c;
}

void Overrides::apply(KeyValueConfig& kv) const {
  if (seed) kv.set("seed", std::to_string(*seed));
  if (apply_rules) kv.set("apply_rules", *apply_rules ? "on" : "off");
  if (embeddings) kv.set("embeddings", *embeddings);
  if (out_dir) kv.set("out_dir", *out_dir);
}

RunConfig resolve(const std::string& config_path, const Overrides& overrides) {
  KeyValueConfig kv = config_path.empty() ? KeyValueConfig() : KeyValueConfig::load(config_path);
  overrides.apply(kv);
  RunConfig rc = RunConfig::from_config(kv);
  rc.validate();
  return rc;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tweet sentiment classification with character and word level networks", "twsent"};
  app.require_subcommand(1);

  std::string config, rules, embeddings, out_dir;
  std::optional<std::uint64_t> seed;
  const auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config,-c", config, "flat key = value config file")->check(CLI::ExistingFile);
  };
  const auto add_rules = [&](CLI::App* sub) {
    sub->add_option("--rules", rules, "semantic rules")->check(CLI::IsMember({"on", "off"}));
  };
  const auto add_run_flags = [&](CLI::App* sub) {
    add_config(sub);
    add_rules(sub);
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--out,-o", out_dir, "output directory");
    sub->add_option("--embeddings", embeddings, "word vectors")
        ->check(CLI::IsMember({"glove200", "word2vec300", "random"}));
  };

  auto* pre = app.add_subcommand("preprocess", "normalize a corpus and apply semantic rules");
  std::string pre_in, pre_out, normalize = "on";
  pre->add_option("input", pre_in, "label<TAB>text corpus")->required();
  pre->add_option("--out,-o", pre_out, "output TSV (default stdout)");
  pre->add_option("--normalize", normalize, "normalization after the rules")
      ->check(CLI::IsMember({"on", "off"}));
  add_config(pre);
  add_rules(pre);

  auto* stats = app.add_subcommand("stats", "corpus statistics table");
  std::vector<std::string> stats_in;
  stats->add_option("inputs", stats_in, "corpora")->required();
  add_config(stats);
  add_rules(stats);

  auto* train = app.add_subcommand("train", "train a classifier");
  add_run_flags(train);

  auto* cv = app.add_subcommand("cv", "k-fold cross validation");
  std::optional<std::size_t> folds;
  add_run_flags(cv);
  cv->add_option("--folds,-k", folds, "number of folds (default from config, else 10)");

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a labeled corpus");
  std::string model_path, eval_in;
  std::size_t threads = 1;
  eval->add_option("--model,-m", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  eval->add_option("input", eval_in, "labeled corpus")->required();
  eval->add_option("--threads", threads, "evaluation threads")->check(CLI::PositiveNumber);
  eval->add_option("--out,-o", out_dir, "write metrics.txt here");
  add_config(eval);

  auto* predict = app.add_subcommand("predict", "classify raw texts");
  std::vector<std::string> texts;
  std::string file;
  predict->add_option("--model,-m", model_path, "checkpoint")->required()->check(CLI::ExistingFile);
  predict->add_option("--text,-t", texts, "text to classify (repeatable)");
  predict->add_option("--file,-f", file, "one text per line, - for stdin");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigFailure;
  }

  Overrides ov;
  ov.seed = seed;
  ov.apply_rules = on_off(rules);
  if (!embeddings.empty()) ov.embeddings = embeddings;
  if (!out_dir.empty()) ov.out_dir = out_dir;

  try {
    if (*pre) return cmd_preprocess(pre_in, pre_out, config, ov, normalize == "on", out, err);
    if (*stats) return cmd_stats(stats_in, config, ov, out);
    if (*train) return cmd_train(config, ov, out, err);
    if (*cv) return cmd_cv(config, ov, folds, out);
    if (*eval) return cmd_eval(model_path, eval_in, config, threads, out_dir, out);
    if (*predict) {
      if (texts.empty() && file.empty()) throw ConfigError("predict needs --text or --file");
      return cmd_predict(model_path, texts, file, out, err);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigFailure;
  } catch (const DivergenceError& e) {
    err << "training diverged: " << e.what() << '\n';
    return kDiverged;
  } catch (const ParseError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const LabelError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const FormatError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const ShapeError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const ContractError& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const DegenerateTweet& e) {
    err << "data error: " << e.what() << '\n';
    return kDataFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kFailure;
  }
  return kFailure;
}

}  // namespace twsent::cli
