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

#include <cmath>

#include "affectlink/error.hpp"
#include "affectlink/vl2e/tensor.hpp"

namespace affectlink::vl2e {
namespace {

using Shapes = std::vector<std::pair<std::string, std::vector<int>>>;

void AddAttention(Shapes& s, const std::string& p, int d) {
  for (const char* m : {"q", "k", "v", "o"}) {
    s.push_back({p + ".w" + m, {d, d}});
    s.push_back({p + ".b" + m, {d}});
  }
}

void AddNorm(Shapes& s, const std::string& p, int d) {
  s.push_back({p + ".gamma", {d}});
  s.push_back({p + ".beta", {d}});
}

void AddFfn(Shapes& s, const std::string& p, int d, int f) {
  s.push_back({p + ".w1", {d, f}});
  s.push_back({p + ".b1", {f}});
  s.push_back({p + ".w2", {f, d}});
  s.push_back({p + ".b2", {d}});
}

void AddSelfLayer(Shapes& s, const std::string& p, const ModelConfig& cfg) {
  AddNorm(s, p + ".ln1", cfg.d_model);
  AddAttention(s, p + ".attn", cfg.d_model);
  AddNorm(s, p + ".ln2", cfg.d_model);
  AddFfn(s, p + ".ffn", cfg.d_model, cfg.ffn_dim());
}

void AddCrossBranch(Shapes& s, const std::string& p, const ModelConfig& cfg) {
  AddNorm(s, p + ".ln_q", cfg.d_model);
  AddNorm(s, p + ".ln_kv", cfg.d_model);
  AddAttention(s, p + ".attn", cfg.d_model);
  AddNorm(s, p + ".ln_ff", cfg.d_model);
  AddFfn(s, p + ".ffn", cfg.d_model, cfg.ffn_dim());
}

bool EndsWith(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

int IntSqrt(int v) {
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(v))));
  return r * r == v ? r : -1;
}

}  // namespace

void ModelConfig::Validate() const {
  auto fail = [](const std::string& why) { throw Error(ErrorCode::kConfigError, why); };
  if (d_model <= 0 || heads <= 0) fail("d_model and heads must be positive");
  if (d_model % heads != 0) fail("d_model must be divisible by heads");
  if (classes != 7) fail("the emotion head has exactly 7 classes");
  if (vision_layers < 0 || text_layers < 0 || fusion_layers < 0) fail("layer counts must be >= 0");
  if (patch_side <= 0 || crop_side <= 0) fail("patch and crop sides must be positive");
  if (crop_side % patch_side != 0) fail("crop side must be a multiple of the patch side");
  if (max_frames <= 0 || max_tokens <= 0) fail("max frames and max tokens must be positive");
  if (vocab_size <= 3) fail("vocabulary must exceed the special tokens");
  if (dropout != 0.0) fail("dropout is not supported");
}

std::vector<std::pair<std::string, std::vector<int>>> ParameterShapes(const ModelConfig& cfg) {
  cfg.Validate();
  const int d = cfg.d_model;
  Shapes s;
  s.push_back({"vision.patch_proj.weight", {cfg.patch_dim(), d}});
  s.push_back({"vision.patch_proj.bias", {d}});
  s.push_back({"vision.patch_pos", {cfg.patches_per_frame(), d}});
  s.push_back({"vision.frame_pos", {cfg.max_frames, d}});
  for (int i = 0; i < cfg.vision_layers; ++i) {
    AddSelfLayer(s, "vision.layer" + std::to_string(i), cfg);
  }
  AddNorm(s, "vision.ln_f", d);

  s.push_back({"text.token_embedding", {cfg.vocab_size, d}});
  s.push_back({"text.pos", {cfg.max_tokens, d}});
  for (int i = 0; i < cfg.text_layers; ++i) {
    AddSelfLayer(s, "text.layer" + std::to_string(i), cfg);
  }
  AddNorm(s, "text.ln_f", d);

  s.push_back({"fusion.null_vision", {d}});
  for (int i = 0; i < cfg.fusion_layers; ++i) {
    AddCrossBranch(s, "fusion.layer" + std::to_string(i) + ".t2v", cfg);
    AddCrossBranch(s, "fusion.layer" + std::to_string(i) + ".v2t", cfg);
  }
  AddNorm(s, "fusion.ln_text", d);
  AddNorm(s, "fusion.ln_vision", d);

  s.push_back({"classifier.weight", {2 * d, cfg.classes}});
  s.push_back({"classifier.bias", {cfg.classes}});
  return s;
}

template <typename Scalar>
ModelParams<Scalar> InitParams(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  ModelParams<Scalar> params;
  for (const auto& [name, shape] : ParameterShapes(cfg)) {
    Tensor<Scalar> t(shape);
    double bound = 0.0;
    double fill = 0.0;
    if (EndsWith(name, ".gamma")) {
      fill = 1.0;
    } else if (name == "text.token_embedding" || name == "text.pos" ||
               name == "vision.patch_pos" || name == "vision.frame_pos" ||
               name == "fusion.null_vision") {
      bound = 0.1;
    } else if (shape.size() == 2) {
      bound = std::sqrt(6.0 / (shape[0] + shape[1]));
      if (name == "classifier.weight") bound *= 0.1;
    }
    for (auto& v : t.data) {
      v = static_cast<Scalar>(bound > 0.0 ? rng.Uniform(-bound, bound) : fill);
    }
    params.emplace(name, std::move(t));
  }
  return params;
}

template <typename Scalar>
GradientMap<Scalar> ZerosLike(const TensorMap<Scalar>& params) {
  GradientMap<Scalar> out;
  for (const auto& [name, t] : params) out.emplace(name, Tensor<Scalar>(t.shape));
  return out;
}

template <typename Scalar>
void CheckParamsMatch(const ModelParams<Scalar>& params, const ModelConfig& cfg) {
  const auto shapes = ParameterShapes(cfg);
  for (const auto& [name, shape] : shapes) {
    auto it = params.find(name);
    if (it == params.end()) {
      throw Error(ErrorCode::kModelFormatError, "missing tensor " + name);
    }
    if (it->second.shape != shape) {
      throw Error(ErrorCode::kModelFormatError, "tensor " + name + " has the wrong shape");
    }
    if (it->second.data.size() != Tensor<Scalar>::NumElements(shape)) {
      throw Error(ErrorCode::kModelFormatError, "tensor " + name + " has the wrong length");
    }
  }
  if (params.size() != shapes.size()) {
    for (const auto& [name, t] : params) {
      bool known = false;
      for (const auto& s : shapes) known = known || s.first == name;
      if (!known) throw Error(ErrorCode::kModelFormatError, "unexpected tensor " + name);
    }
  }
}

template <typename Scalar>
ModelConfig InferConfig(const ModelParams<Scalar>& params, int heads) {
  auto shape_of = [&](const std::string& name) -> const std::vector<int>& {
    auto it = params.find(name);
    if (it == params.end()) throw Error(ErrorCode::kModelFormatError, "missing tensor " + name);
    return it->second.shape;
  };
  auto count_layers = [&](const std::string& prefix, const std::string& probe) {
    int n = 0;
    while (params.count(prefix + std::to_string(n) + probe)) ++n;
    return n;
  };
  ModelConfig cfg;
  const auto& emb = shape_of("text.token_embedding");
  if (emb.size() != 2) throw Error(ErrorCode::kModelFormatError, "token embedding must be rank 2");
  cfg.vocab_size = emb[0];
  cfg.d_model = emb[1];
  cfg.heads = heads;
  cfg.max_tokens = shape_of("text.pos").at(0);
  cfg.max_frames = shape_of("vision.frame_pos").at(0);
  const int patch = IntSqrt(shape_of("vision.patch_proj.weight").at(0) / 3);
  const int per_side = IntSqrt(shape_of("vision.patch_pos").at(0));
  if (patch <= 0 || per_side <= 0) {
    throw Error(ErrorCode::kModelFormatError, "vision tensors do not describe square patches");
  }
  cfg.patch_side = patch;
  cfg.crop_side = patch * per_side;
  cfg.vision_layers = count_layers("vision.layer", ".ln1.gamma");
  cfg.text_layers = count_layers("text.layer", ".ln1.gamma");
  cfg.fusion_layers = count_layers("fusion.layer", ".t2v.ln_q.gamma");
  try {
    cfg.Validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::kModelFormatError, e.what());
  }
  CheckParamsMatch(params, cfg);
  return cfg;
}

template ModelParams<float> InitParams<float>(const ModelConfig&, std::uint64_t);
template ModelParams<double> InitParams<double>(const ModelConfig&, std::uint64_t);
template GradientMap<float> ZerosLike<float>(const TensorMap<float>&);
template GradientMap<double> ZerosLike<double>(const TensorMap<double>&);
template void CheckParamsMatch<float>(const ModelParams<float>&, const ModelConfig&);
template void CheckParamsMatch<double>(const ModelParams<double>&, const ModelConfig&);
template ModelConfig InferConfig<float>(const ModelParams<float>&, int);
template ModelConfig InferConfig<double>(const ModelParams<double>&, int);

}  // namespace affectlink::vl2e
