// Copyright 2026 The Affectlink Authors.
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

#ifndef AFFECTLINK_VL2E_TRAINER_HPP
#define AFFECTLINK_VL2E_TRAINER_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "affectlink/vl2e/model.hpp"

namespace affectlink::vl2e {

// Linear warmup from 0 to `peak` over `warmup_steps`, then cosine decay that
// reaches exactly 0 at step total_steps - 1.
class CosineWarmupSchedule {
 public:
  CosineWarmupSchedule(double peak, std::size_t warmup_steps, std::size_t total_steps);
  double At(std::size_t step) const;

 private:
  double peak_;
  std::size_t warmup_;
  std::size_t total_;
};

struct OptimizerConfig {
  double peak_lr = 3e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.01;
  double warmup_fraction = 0.1;
  std::size_t batch_size = 16;
  std::size_t epochs = 300;
  std::uint64_t seed = 0;
  bool class_weighted = false;
  // Stop after an epoch whose train accuracy reaches this value (> 1 never).
  double stop_at_train_accuracy = 2.0;
};

template <typename Scalar>
class AdamW {
 public:
  AdamW(const ModelParams<Scalar>& params, const OptimizerConfig& cfg);
  // Decoupled weight decay: p -= lr * (m_hat / (sqrt(v_hat) + eps) + wd * p).
  void Step(ModelParams<Scalar>& params, const GradientMap<Scalar>& grads, double lr);
  std::size_t steps() const { return t_; }

 private:
  OptimizerConfig cfg_;
  GradientMap<Scalar> m_;
  GradientMap<Scalar> v_;
  std::size_t t_ = 0;
};

struct TrainHistory {
  std::vector<double> step_loss;
  std::vector<double> step_lr;
  std::vector<double> epoch_loss;
  std::vector<double> epoch_accuracy;  // train accuracy after each epoch
  std::size_t epochs_run = 0;
};

using EpochCallback = std::function<void(std::size_t epoch, double loss, double accuracy)>;

// Mini-batch AdamW training, deterministic for a fixed seed. Throws
// Error{kDivergenceError} naming the step index on a non-finite loss.
template <typename Scalar>
TrainHistory Train(std::span<const Sample> dataset, ModelParams<Scalar>& params,
                   const ModelConfig& cfg, const OptimizerConfig& opt,
                   const EpochCallback& on_epoch = nullptr);

template <typename Scalar>
double Accuracy(std::span<const Sample> data, const ModelParams<Scalar>& params,
                const ModelConfig& cfg);

}  // namespace affectlink::vl2e

#endif  // AFFECTLINK_VL2E_TRAINER_HPP
