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

#include "twsent/training.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>

#include "twsent/errors.h"
#include "twsent/rng.h"

namespace twsent::training {

namespace {

// Stream offsets so shuffling and dropout never share draws.
constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kDropoutStream = 0x44524f50ULL;

// Rows within this relative slack of the bound count as satisfying it, so a
// second renorm_l2 pass is a no-op.
constexpr double kNormSlack = 1e-12;

std::size_t read_count(const KeyValueConfig& kv, const std::string& key, std::size_t fallback) {
  const long v = kv.get_int(key, static_cast<long>(fallback));
  if (v < 0) throw ConfigError(key + " must not be negative");
  return static_cast<std::size_t>(v);
}

std::vector<std::size_t> predict_range(const model::ModelParams& params,
                                       std::span<const Example> examples) {
  std::vector<std::size_t> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) {
    out.push_back(model::argmax(model::predict(params, ex.sentence)));
  }
  return out;
}

struct Snapshot {
  std::vector<Tensor> values;

  static Snapshot take(model::ModelParams& p) {
    Snapshot s;
    for (auto* q : p.all()) s.values.push_back(q->value);
    return s;
  }
  void restore(model::ModelParams& p) const {
    const auto params = p.all();
    for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
  }
};

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch_size must be at least 1");
  if (max_epochs < 1) throw ConfigError("max_epochs must be at least 1");
  if (!(adadelta_rho > 0 && adadelta_rho < 1)) throw ConfigError("adadelta_rho must be in (0, 1)");
  if (!(adadelta_eps > 0)) throw ConfigError("adadelta_eps must be positive");
  if (!(l2_max_norm > 0)) throw ConfigError("l2_max_norm must be positive");
  if (eval_threads < 1) throw ConfigError("eval_threads must be at least 1");
}

void TrainConfig::write(KeyValueConfig& kv) const {
  kv.set("batch_size", std::to_string(batch_size));
  kv.set("max_epochs", std::to_string(max_epochs));
  kv.set("adadelta_rho", format_double(adadelta_rho));
  kv.set("adadelta_eps", format_double(adadelta_eps));
  kv.set("l2_max_norm", format_double(l2_max_norm));
  kv.set("seed", std::to_string(seed));
  kv.set("patience", std::to_string(patience));
  kv.set("eval_threads", std::to_string(eval_threads));
}

TrainConfig TrainConfig::read(const KeyValueConfig& kv) {
  TrainConfig c;
  c.batch_size = read_count(kv, "batch_size", c.batch_size);
  c.max_epochs = read_count(kv, "max_epochs", c.max_epochs);
  c.adadelta_rho = kv.get_double("adadelta_rho", c.adadelta_rho);
  c.adadelta_eps = kv.get_double("adadelta_eps", c.adadelta_eps);
  c.l2_max_norm = kv.get_double("l2_max_norm", c.l2_max_norm);
  c.seed = read_count(kv, "seed", c.seed);
  c.patience = read_count(kv, "patience", c.patience);
  c.eval_threads = read_count(kv, "eval_threads", c.eval_threads);
  c.validate();
  return c;
}

OptimizerState OptimizerState::for_params(std::span<Parameter* const> params) {
  OptimizerState s;
  for (const auto* p : params) {
    s.mean_sq_grad.emplace_back(p->value.shape());
    s.mean_sq_delta.emplace_back(p->value.shape());
  }
  return s;
}

void adadelta_step(std::span<Parameter* const> params, OptimizerState& state, double rho,
                   double eps) {
  if (state.mean_sq_grad.size() != params.size()) {
    throw ShapeError("optimizer state does not match the parameter list");
  }
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = *params[k];
    if (!p.trainable) continue;
    auto x = p.value.values();
    auto g = p.grad.values();
    auto eg = state.mean_sq_grad[k].values();
    auto edx = state.mean_sq_delta[k].values();
    if (g.size() != x.size() || eg.size() != x.size()) {
      throw ShapeError("adadelta_step: shape mismatch for " + p.name);
    }
    for (std::size_t i = 0; i < x.size(); ++i) {
      eg[i] = rho * eg[i] + (1 - rho) * g[i] * g[i];
      const double dx = -std::sqrt(edx[i] + eps) / std::sqrt(eg[i] + eps) * g[i];
      edx[i] = rho * edx[i] + (1 - rho) * dx * dx;
      x[i] += dx;
    }
  }
}

void renorm_l2(std::span<Parameter* const> matrices, double max_norm) {
  if (!(max_norm > 0)) throw ContractError("max_norm must be positive");
  for (auto* p : matrices) {
    if (p->value.rank() != 2) throw ShapeError("renorm_l2 expects matrices: " + p->name);
    const std::size_t rows = p->value.dim(0), cols = p->value.dim(1);
    for (std::size_t r = 0; r < rows; ++r) {
      double sq = 0;
      for (std::size_t c = 0; c < cols; ++c) sq += p->value.at(r, c) * p->value.at(r, c);
      const double norm = std::sqrt(sq);
      if (norm <= max_norm * (1 + kNormSlack)) continue;
      const double k = max_norm / norm;
      for (std::size_t c = 0; c < cols; ++c) p->value.at(r, c) *= k;
    }
  }
}

std::string TrainReport::serialize() const {
  std::string out;
  for (const auto& e : epochs) {
    out += std::to_string(e.epoch) + '\t' + format_double(e.train_loss) + '\t' +
           format_double(e.dev_accuracy) + '\n';
  }
  return out;
}

TrainReport train(model::ModelParams& params, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const StepObserver& observer) {
  config.validate();
  if (train_set.empty() || dev_set.empty()) throw ContractError("train: empty split");
  const auto all = params.all();
  const auto constrained = params.constrained();
  OptimizerState state = OptimizerState::for_params(all);
  Rng shuffle_rng(config.seed ^ kShuffleStream);
  Rng dropout_rng(config.seed ^ kDropoutStream);

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);

  TrainReport report;
  Snapshot best;
  std::size_t since_best = 0;
  std::size_t step = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    shuffle_rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      const double inv = 1.0 / static_cast<double>(end - start);
      for (auto* p : all) p->zero_grad();
      for (std::size_t b = start; b < end; ++b) {
        const Example& ex = train_set[order[b]];
        ad::Graph g;
        const ad::Var z = model::logits(g, params, ex.sentence, &dropout_rng);
        const auto out = ad::softmax_xent(z, ex.label);
        const double loss = out.loss.value()[0];
        if (!std::isfinite(loss)) {
          throw DivergenceError(static_cast<int>(epoch), "non-finite training loss");
        }
        loss_sum += loss;
        g.backward(out.loss, inv);
      }
      adadelta_step(all, state, config.adadelta_rho, config.adadelta_eps);
      renorm_l2(constrained, config.l2_max_norm);
      ++step;
      if (observer) observer(params, epoch, step);
    }
    EpochRecord record{epoch, loss_sum / static_cast<double>(train_set.size()),
                       evaluate(params, dev_set, config.eval_threads).accuracy};
    report.epochs.push_back(record);
    if (report.best_epoch == 0 || record.dev_accuracy > report.best_dev_accuracy) {
      report.best_epoch = epoch;
      report.best_dev_accuracy = record.dev_accuracy;
      best = Snapshot::take(params);
      since_best = 0;
    } else {
      ++since_best;
    }
    if (since_best >= config.patience) break;
  }
  best.restore(params);
  return report;
}

Evaluation evaluate(const model::ModelParams& params, std::span<const Example> examples,
                    std::size_t threads) {
  Evaluation e;
  const std::size_t classes = params.config.num_classes;
  e.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
  e.total = examples.size();
  threads = std::max<std::size_t>(1, std::min(threads, examples.size()));
  if (threads == 1) {
    e.predictions = predict_range(params, examples);
  } else {
    std::vector<std::vector<std::size_t>> shards(threads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (examples.size() + threads - 1) / threads;
    for (std::size_t t = 0; t < threads; ++t) {
      const std::size_t lo = std::min(examples.size(), t * chunk);
      const std::size_t hi = std::min(examples.size(), lo + chunk);
      workers.emplace_back([&, t, lo, hi] {
        shards[t] = predict_range(params, examples.subspan(lo, hi - lo));
      });
    }
    for (auto& w : workers) w.join();
    for (const auto& s : shards) e.predictions.insert(e.predictions.end(), s.begin(), s.end());
  }
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const std::size_t gold = examples[i].label;
    if (gold >= classes) throw ContractError("label outside the model's classes");
    ++e.confusion[gold][e.predictions[i]];
    if (gold == e.predictions[i]) ++e.correct;
  }
  e.accuracy = e.total == 0 ? 0.0 : static_cast<double>(e.correct) / static_cast<double>(e.total);
  return e;
}

std::string format_evaluation(const Evaluation& e) {
  std::ostringstream out;
  out << "accuracy = " << format_double(e.accuracy) << '\n'
      << "correct = " << e.correct << '\n'
      << "total = " << e.total << '\n';
  for (std::size_t g = 0; g < e.confusion.size(); ++g) {
    for (std::size_t p = 0; p < e.confusion[g].size(); ++p) {
      out << "confusion_" << g << '_' << p << " = " << e.confusion[g][p] << '\n';
    }
  }
  return out.str();
}

}  // namespace twsent::training
