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

#ifndef TWSENT_TRAINING_H_
#define TWSENT_TRAINING_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "twsent/autodiff.h"
#include "twsent/embeddings.h"
#include "twsent/kv_config.h"
#include "twsent/model.h"

namespace twsent::training {

using ad::Parameter;
using ad::Tensor;

struct TrainConfig {
  std::size_t batch_size = 4;
  std::size_t max_epochs = 50;
  double adadelta_rho = 0.95;
  double adadelta_eps = 1e-6;
  double l2_max_norm = 3.0;
  std::uint64_t seed = 1;
  std::size_t patience = 10;
  std::size_t eval_threads = 1;

  // Throws ConfigError.
  void validate() const;
  void write(KeyValueConfig& kv) const;
  static TrainConfig read(const KeyValueConfig& kv);

  friend bool operator==(const TrainConfig&, const TrainConfig&) = default;
};

// E[g^2] and E[dx^2] per parameter, zero-initialized.
struct OptimizerState {
  std::vector<Tensor> mean_sq_grad;
  std::vector<Tensor> mean_sq_delta;

  static OptimizerState for_params(std::span<Parameter* const> params);
};

// One Adadelta update from each parameter's accumulated grad. Parameters
// with trainable == false are left alone.
void adadelta_step(std::span<Parameter* const> params, OptimizerState& state,
                   double rho, double eps);

// Rescales every row of each rank-2 tensor whose l2 norm exceeds max_norm.
void renorm_l2(std::span<Parameter* const> matrices, double max_norm);

struct Example {
  embeddings::IndexedSentence sentence;
  std::size_t label = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0;  // mean over the epoch's examples
  double dev_accuracy = 0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
  std::size_t best_epoch = 0;
  double best_dev_accuracy = 0;
  std::string best_checkpoint;

  // `epoch<TAB>train_loss<TAB>dev_acc` lines, values printed exactly.
  std::string serialize() const;
};

// Called after each optimizer step with the 1-based epoch and the global
// step count.
using StepObserver =
    std::function<void(const model::ModelParams&, std::size_t epoch, std::size_t step)>;

// Mini-batch training with shuffling, dropout, Adadelta and max-norm. On
// return `params` hold the weights of the best dev epoch. Throws
// ContractError on empty splits and DivergenceError on a non-finite loss.
TrainReport train(model::ModelParams& params, std::span<const Example> train_set,
                  std::span<const Example> dev_set, const TrainConfig& config,
                  const StepObserver& observer = {});

struct Evaluation {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy = 0;
  // confusion[gold][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> predictions;
};

// Eval-mode predictions, optionally sharded across threads; results are
// merged in example order.
Evaluation evaluate(const model::ModelParams& params, std::span<const Example> examples,
                    std::size_t threads = 1);

std::string format_evaluation(const Evaluation& e);

}  // namespace twsent::training

#endif  // TWSENT_TRAINING_H_
