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

#ifndef AFFECTLINK_VL2E_MODEL_HPP
#define AFFECTLINK_VL2E_MODEL_HPP

// Vision-language to emotion model.
//
//   delta frames -> patch projection, mean over patches, + frame position
//                -> pre-norm self-attention stack               (vision, V)
//   token ids    -> embedding + position -> pre-norm stack        (text, T)
//   fusion       -> bidirectional cross-attention blocks:
//                   text queries over V, vision queries over T
//                -> mean-pool both branches, concatenate [2d]
//                -> linear head over the seven emotions
//
// An utterance without visual evidence uses a learned null-vision row.

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "affectlink/percept/face.hpp"
#include "affectlink/vl2e/autograd.hpp"
#include "affectlink/vl2e/tensor.hpp"

namespace affectlink::vl2e {

// Parameter-free first stage of the vision encoder: each delta frame split
// into patch_side x patch_side patches and averaged over patches. The patch
// projection is linear, so projecting the mean patch equals averaging the
// projected patches.
struct VisionInput {
  int frames = 0;
  int patch_dim = 0;
  std::vector<double> patch_means;  // frames x patch_dim, row-major
};

// Throws Error{kConfigError} if the crop side is not a multiple of the patch
// side, differs from the model's crop side, or more than max_frames frames are
// given.
VisionInput PrepareVision(const percept::DeltaSequence& delta, const ModelConfig& cfg);

struct Sample {
  std::vector<int> tokens;
  std::optional<VisionInput> vision;  // nullopt: text-only
  int label = 0;
};

Sample MakeSample(std::vector<int> tokens, const std::optional<percept::DeltaSequence>& delta,
                  int label, const ModelConfig& cfg);

template <typename Scalar>
struct AttentionTrace {
  // One probability matrix per (layer, head) in evaluation order.
  std::vector<Matrix<Scalar>> probs;
};

// Per-frame features before the vision self-attention stack: [F', d].
template <typename Scalar>
Matrix<Scalar> EncodeVision(const percept::DeltaSequence& delta, const ModelParams<Scalar>& params,
                            const ModelConfig& cfg);

// One pre-norm transformer layer (self-attention + feed-forward, both with
// residuals) using the parameters under `prefix`, e.g. "vision.layer0".
template <typename Scalar>
Matrix<Scalar> SelfAttend(const Matrix<Scalar>& x, const ModelParams<Scalar>& params,
                          const std::string& prefix, const ModelConfig& cfg,
                          AttentionTrace<Scalar>* trace = nullptr);

// Full text stack output H (the whole last hidden state sequence): [L, d].
template <typename Scalar>
Matrix<Scalar> EncodeText(std::span<const int> tokens, const ModelParams<Scalar>& params,
                          const ModelConfig& cfg);

// Full vision stack output [F', d]; empty when there are no frames.
template <typename Scalar>
Matrix<Scalar> EncodeVisionStack(const VisionInput* vision,
                                 const ModelParams<Scalar>& params, const ModelConfig& cfg);

// Fused [1, 2d] feature. `vision` may have zero rows. Throws
// Error{kNoTextInput} when `text` has no rows.
template <typename Scalar>
Matrix<Scalar> CrossmodalFuse(const Matrix<Scalar>& vision, const Matrix<Scalar>& text,
                              const ModelParams<Scalar>& params, const ModelConfig& cfg,
                              AttentionTrace<Scalar>* trace = nullptr);

template <typename Scalar>
struct ForwardResult {
  Matrix<Scalar> logits;  // [B, 7]
  Scalar loss = 0;
};

template <typename Scalar>
struct BackwardResult {
  ForwardResult<Scalar> forward;
  GradientMap<Scalar> grads;
};

// Optional per-class loss weights; the loss is sum_i w[y_i] * ce_i / sum_i w[y_i].
using ClassWeights = std::optional<std::array<double, 7>>;

// Throws Error{kBadLabel} for labels outside 0..6 and Error{kConfigError} for
// an empty batch.
template <typename Scalar>
ForwardResult<Scalar> Forward(std::span<const Sample> batch, const ModelParams<Scalar>& params,
                              const ModelConfig& cfg, const ClassWeights& weights = std::nullopt);

template <typename Scalar>
BackwardResult<Scalar> Backward(std::span<const Sample> batch, const ModelParams<Scalar>& params,
                                const ModelConfig& cfg, const ClassWeights& weights = std::nullopt);

// Same as Backward over borrowed samples.
template <typename Scalar>
BackwardResult<Scalar> Backward(std::span<const Sample* const> batch,
                                const ModelParams<Scalar>& params, const ModelConfig& cfg,
                                const ClassWeights& weights = std::nullopt);

// Softmax probabilities for one sample, label order neutral..anger.
template <typename Scalar>
std::array<double, 7> Predict(const Sample& sample, const ModelParams<Scalar>& params,
                              const ModelConfig& cfg);

// Inverse-frequency weights normalized to mean 1 over classes present.
ClassWeights InverseFrequencyWeights(std::span<const Sample> data);

struct GradCheckEntry {
  std::string name;
  std::size_t elements = 0;
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  double max_rel_error = 0.0;
};

// Central finite differences over every element of every parameter tensor.
// Relative error per element is |a - n| / max(|a|, |n|, floor).
GradCheckReport GradCheck(std::span<const Sample> batch, const ModelParams<double>& params,
                          const ModelConfig& cfg, double eps = 1e-5, double floor = 1e-6);

// The small configuration used for gradient verification.
ModelConfig GradCheckConfig(int d_model = 16);

// Random batch that is valid for `cfg` (frames, tokens and labels).
std::vector<Sample> RandomBatch(const ModelConfig& cfg, std::size_t batch, int frames, int tokens,
                                std::uint64_t seed);

}  // namespace affectlink::vl2e

#endif  // AFFECTLINK_VL2E_MODEL_HPP
