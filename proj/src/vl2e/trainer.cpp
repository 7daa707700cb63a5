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

#include "affectlink/vl2e/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affectlink/error.hpp"

namespace affectlink::vl2e {

CosineWarmupSchedule::CosineWarmupSchedule(double peak, std::size_t warmup_steps,
                                           std::size_t total_steps)
    : peak_(peak), warmup_(warmup_steps), total_(total_steps) {
  if (total_ == 0) throw Error(ErrorCode::kConfigError, "schedule needs at least one step");
  if (warmup_ >= total_) warmup_ = total_ - 1;
}

double CosineWarmupSchedule::At(std::size_t step) const {
  if (step < warmup_) return peak_ * static_cast<double>(step) / static_cast<double>(warmup_);
  const std::size_t last = total_ - 1;
  if (step >= last) return last == warmup_ ? peak_ : 0.0;
  const double progress =
      static_cast<double>(step - warmup_) / static_cast<double>(last - warmup_);
  return 0.5 * peak_ * (1.0 + std::cos(3.14159265358979323846 * progress));
}

template <typename Scalar>
AdamW<Scalar>::AdamW(const ModelParams<Scalar>& params, const OptimizerConfig& cfg)
    : cfg_(cfg), m_(ZerosLike(params)), v_(ZerosLike(params)) {}

template <typename Scalar>
void AdamW<Scalar>::Step(ModelParams<Scalar>& params, const GradientMap<Scalar>& grads, double lr) {
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (auto& [name, tensor] : params) {
    const auto& g = grads.at(name).data;
    auto& m = m_.at(name).data;
    auto& v = v_.at(name).data;
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      const double gi = static_cast<double>(g[i]);
      const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * gi;
      const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * gi * gi;
      m[i] = static_cast<Scalar>(mi);
      v[i] = static_cast<Scalar>(vi);
      const double update = (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps) +
                            cfg_.weight_decay * static_cast<double>(tensor.data[i]);
      tensor.data[i] = static_cast<Scalar>(static_cast<double>(tensor.data[i]) - lr * update);
    }
  }
}

template <typename Scalar>
double Accuracy(std::span<const Sample> data, const ModelParams<Scalar>& params,
                const ModelConfig& cfg) {
  if (data.empty()) return 0.0;
  std::size_t correct = 0;
  for (const auto& s : data) {
    const auto p = Predict(s, params, cfg);
    const int arg = static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
    if (arg == s.label) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

template <typename Scalar>
TrainHistory Train(std::span<const Sample> dataset, ModelParams<Scalar>& params,
                   const ModelConfig& cfg, const OptimizerConfig& opt,
                   const EpochCallback& on_epoch) {
  if (dataset.empty()) throw Error(ErrorCode::kConfigError, "empty training set");
  if (opt.batch_size == 0 || opt.epochs == 0) {
    throw Error(ErrorCode::kConfigError, "batch size and epochs must be positive");
  }
  CheckParamsMatch(params, cfg);
  const std::size_t batches = (dataset.size() + opt.batch_size - 1) / opt.batch_size;
  const std::size_t total = batches * opt.epochs;
  const auto warmup = static_cast<std::size_t>(std::floor(opt.warmup_fraction * total));
  const CosineWarmupSchedule schedule(opt.peak_lr, warmup, total);
  const ClassWeights weights = opt.class_weighted ? InverseFrequencyWeights(dataset) : std::nullopt;

  AdamW<Scalar> optimizer(params, opt);
  Rng rng(opt.seed);
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Sample*> batch;

  TrainHistory history;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < opt.epochs; ++epoch) {
    // Fisher-Yates with the portable generator.
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[rng.Below(i)]);
    }
    double epoch_loss = 0.0;
    for (std::size_t b = 0; b < batches; ++b, ++step) {
      batch.clear();
      const std::size_t end = std::min(dataset.size(), (b + 1) * opt.batch_size);
      for (std::size_t i = b * opt.batch_size; i < end; ++i) batch.push_back(&dataset[order[i]]);
      auto result = Backward<Scalar>(std::span<const Sample* const>(batch), params, cfg, weights);
      const double loss = static_cast<double>(result.forward.loss);
      if (!std::isfinite(loss)) {
        throw Error(ErrorCode::kDivergenceError, "non-finite loss at step " + std::to_string(step));
      }
      const double lr = schedule.At(step);
      optimizer.Step(params, result.grads, lr);
      history.step_loss.push_back(loss);
      history.step_lr.push_back(lr);
      epoch_loss += loss * static_cast<double>(batch.size());
    }
    epoch_loss /= static_cast<double>(dataset.size());
    const double acc = Accuracy(dataset, params, cfg);
    history.epoch_loss.push_back(epoch_loss);
    history.epoch_accuracy.push_back(acc);
    history.epochs_run = epoch + 1;
    if (on_epoch) on_epoch(epoch, epoch_loss, acc);
    if (acc >= opt.stop_at_train_accuracy) break;
  }
  return history;
}

template class AdamW<float>;
template class AdamW<double>;
template TrainHistory Train<float>(std::span<const Sample>, ModelParams<float>&, const ModelConfig&,
                                   const OptimizerConfig&, const EpochCallback&);
template TrainHistory Train<double>(std::span<const Sample>, ModelParams<double>&,
                                    const ModelConfig&, const OptimizerConfig&,
                                    const EpochCallback&);
template double Accuracy<float>(std::span<const Sample>, const ModelParams<float>&,
                                const ModelConfig&);
template double Accuracy<double>(std::span<const Sample>, const ModelParams<double>&,
                                 const ModelConfig&);

}  // namespace affectlink::vl2e
