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

#ifndef AFFECTLINK_VL2E_TENSOR_HPP
#define AFFECTLINK_VL2E_TENSOR_HPP

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace affectlink::vl2e {

template <typename Scalar>
struct Tensor {
  std::vector<int> shape;
  std::vector<Scalar> data;  // row-major

  Tensor() = default;
  explicit Tensor(std::vector<int> dims, Scalar fill = Scalar(0))
      : shape(std::move(dims)), data(NumElements(shape), fill) {}

  static std::size_t NumElements(const std::vector<int>& dims) {
    std::size_t n = 1;
    for (int d : dims) n *= static_cast<std::size_t>(d);
    return n;
  }
  std::size_t size() const { return data.size(); }
  int rows() const { return shape.size() >= 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 1 : shape.back(); }

  friend bool operator==(const Tensor&, const Tensor&) = default;
};

struct ModelConfig {
  int d_model = 32;
  int heads = 4;
  int vision_layers = 2;
  int text_layers = 2;
  int fusion_layers = 1;
  int patch_side = 8;
  int crop_side = 64;
  int max_frames = 32;
  int max_tokens = 256;
  int vocab_size = 4096;
  int classes = 7;
  double dropout = 0.0;  // kept at zero; dropout is not applied

  int ffn_dim() const { return 4 * d_model; }
  int head_dim() const { return d_model / heads; }
  int patch_dim() const { return patch_side * patch_side * 3; }
  int patches_per_frame() const {
    const int n = crop_side / patch_side;
    return n * n;
  }

  // Throws Error{kConfigError} on inconsistent settings.
  void Validate() const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// Parameter names in a stable order, each with its shape for `cfg`.
std::vector<std::pair<std::string, std::vector<int>>> ParameterShapes(const ModelConfig& cfg);

// Named parameter (or gradient) tensors. std::map keeps names unique and the
// iteration order fixed, which makes reductions over parameters reproducible.
template <typename Scalar>
using TensorMap = std::map<std::string, Tensor<Scalar>>;

template <typename Scalar>
using ModelParams = TensorMap<Scalar>;

template <typename Scalar>
using GradientMap = TensorMap<Scalar>;

// Uniform (Xavier-style) initialization; deterministic for a given seed.
template <typename Scalar>
ModelParams<Scalar> InitParams(const ModelConfig& cfg, std::uint64_t seed);

template <typename Scalar>
GradientMap<Scalar> ZerosLike(const TensorMap<Scalar>& params);

// Throws Error{kModelFormatError} naming the first missing, extra or
// mis-shaped tensor.
template <typename Scalar>
void CheckParamsMatch(const ModelParams<Scalar>& params, const ModelConfig& cfg);

// Recovers a config from tensor shapes; `heads` cannot be inferred.
template <typename Scalar>
ModelConfig InferConfig(const ModelParams<Scalar>& params, int heads);

// Deterministic 64-bit generator with a portable uniform conversion.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}
  std::uint64_t Next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // Uniform in [0, 1).
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  // Uniform integer in [0, n).
  std::uint64_t Below(std::uint64_t n) { return Next() % n; }

 private:
  std::uint64_t state_;
};

}  // namespace affectlink::vl2e

#endif  // AFFECTLINK_VL2E_TENSOR_HPP
