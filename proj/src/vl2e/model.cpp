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

#include "affectlink/vl2e/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "affectlink/error.hpp"

namespace affectlink::vl2e {
namespace {

template <typename Scalar>
class Graph {
 public:
  using Var = typename Tape<Scalar>::Var;
  using Mat = Matrix<Scalar>;
  static constexpr Var kNone = -1;

  Graph(Tape<Scalar>& tape, const ModelConfig& cfg, AttentionTrace<Scalar>* trace = nullptr)
      : tape_(tape), cfg_(cfg), trace_(trace) {}

  Var Norm(Var x, const std::string& p) {
    return tape_.LayerNorm(x, tape_.Param(p + ".gamma"), tape_.Param(p + ".beta"));
  }

  Var Linear(Var x, const std::string& w, const std::string& b) {
    return tape_.AddRow(tape_.MatMul(x, tape_.Param(w)), tape_.Param(b));
  }

  Var Attention(Var q_in, Var kv_in, const std::string& p) {
    const Var q = Linear(q_in, p + ".wq", p + ".bq");
    const Var k = Linear(kv_in, p + ".wk", p + ".bk");
    const Var v = Linear(kv_in, p + ".wv", p + ".bv");
    const int dh = cfg_.head_dim();
    const Scalar scale = Scalar(1) / std::sqrt(static_cast<Scalar>(dh));
    std::vector<Var> heads;
    for (int h = 0; h < cfg_.heads; ++h) {
      const Var qh = tape_.SliceCols(q, h * dh, dh);
      const Var kh = tape_.SliceCols(k, h * dh, dh);
      const Var vh = tape_.SliceCols(v, h * dh, dh);
      const Var probs = tape_.SoftmaxRows(tape_.Scale(tape_.MatMulNT(qh, kh), scale));
      if (trace_ != nullptr) trace_->probs.push_back(tape_.value(probs));
      heads.push_back(tape_.MatMul(probs, vh));
    }
    const Var merged = heads.size() == 1 ? heads.front() : tape_.ConcatCols(heads);
    return Linear(merged, p + ".wo", p + ".bo");
  }

  Var Ffn(Var x, const std::string& p) {
    return Linear(tape_.Gelu(Linear(x, p + ".w1", p + ".b1")), p + ".w2", p + ".b2");
  }

  Var SelfLayer(Var x, const std::string& p) {
    const Var h = Norm(x, p + ".ln1");
    x = tape_.Add(x, Attention(h, h, p + ".attn"));
    return tape_.Add(x, Ffn(Norm(x, p + ".ln2"), p + ".ffn"));
  }

  Var CrossBranch(Var query_side, Var context_side, const std::string& p) {
    Var x = tape_.Add(query_side, Attention(Norm(query_side, p + ".ln_q"),
                                            Norm(context_side, p + ".ln_kv"), p + ".attn"));
    return tape_.Add(x, Ffn(Norm(x, p + ".ln_ff"), p + ".ffn"));
  }

  Var VisionFeatures(const VisionInput& vision) {
    const int frames = vision.frames;
    if (vision.patch_dim != cfg_.patch_dim() ||
        vision.patch_means.size() != static_cast<std::size_t>(frames) * cfg_.patch_dim()) {
      throw Error(ErrorCode::kConfigError, "vision input does not match the model's patch size");
    }
    if (frames > cfg_.max_frames) {
      throw Error(ErrorCode::kConfigError, "more frames than the model supports");
    }
    Mat mean_patch(frames, cfg_.patch_dim());
    for (Eigen::Index i = 0; i < mean_patch.size(); ++i) {
      mean_patch.data()[i] = static_cast<Scalar>(vision.patch_means[static_cast<std::size_t>(i)]);
    }
    Var out = Linear(tape_.Constant(std::move(mean_patch)), "vision.patch_proj.weight",
                     "vision.patch_proj.bias");
    out = tape_.AddRow(out, tape_.MeanRows(tape_.Param("vision.patch_pos")));
    std::vector<int> rows(static_cast<std::size_t>(frames));
    std::iota(rows.begin(), rows.end(), 0);
    return tape_.Add(out, tape_.GatherRows("vision.frame_pos", rows));
  }

  Var VisionStack(const VisionInput* vision) {
    if (vision == nullptr || vision->frames == 0) return kNone;
    Var x = VisionFeatures(*vision);
    for (int i = 0; i < cfg_.vision_layers; ++i) x = SelfLayer(x, "vision.layer" + std::to_string(i));
    return Norm(x, "vision.ln_f");
  }

  Var TextStack(std::span<const int> tokens) {
    if (tokens.empty()) throw Error(ErrorCode::kNoTextInput, "no text tokens");
    const std::size_t keep = std::min<std::size_t>(tokens.size(), static_cast<std::size_t>(cfg_.max_tokens));
    std::vector<int> ids(tokens.end() - static_cast<std::ptrdiff_t>(keep), tokens.end());
    std::vector<int> pos(keep);
    std::iota(pos.begin(), pos.end(), 0);
    Var x = tape_.Add(tape_.GatherRows("text.token_embedding", ids), tape_.GatherRows("text.pos", pos));
    for (int i = 0; i < cfg_.text_layers; ++i) x = SelfLayer(x, "text.layer" + std::to_string(i));
    return Norm(x, "text.ln_f");
  }

  Var Fuse(Var vision, Var text) {
    if (vision == kNone) vision = tape_.Param("fusion.null_vision");
    for (int i = 0; i < cfg_.fusion_layers; ++i) {
      const std::string p = "fusion.layer" + std::to_string(i);
      const Var t_next = CrossBranch(text, vision, p + ".t2v");
      const Var v_next = CrossBranch(vision, text, p + ".v2t");
      text = t_next;
      vision = v_next;
    }
    const std::vector<Var> pooled = {tape_.MeanRows(Norm(text, "fusion.ln_text")),
                                     tape_.MeanRows(Norm(vision, "fusion.ln_vision"))};
    return tape_.ConcatCols(pooled);
  }

  Var Logits(const Sample& s) {
    const Var vision = VisionStack(s.vision ? &*s.vision : nullptr);
    const Var text = TextStack(s.tokens);
    return Linear(Fuse(vision, text), "classifier.weight", "classifier.bias");
  }

 private:
  Tape<Scalar>& tape_;
  const ModelConfig& cfg_;
  AttentionTrace<Scalar>* trace_;
};

void CheckLabel(int label) {
  if (label < 0 || label >= 7) {
    throw Error(ErrorCode::kBadLabel, "label " + std::to_string(label) + " outside 0..6");
  }
}

template <typename Scalar>
std::array<double, 7> Softmax(const Matrix<Scalar>& row) {
  std::array<double, 7> p{};
  const double mx = static_cast<double>(row.maxCoeff());
  double sum = 0.0;
  for (int c = 0; c < 7; ++c) {
    p[c] = std::exp(static_cast<double>(row(0, c)) - mx);
    sum += p[c];
  }
  for (auto& v : p) v /= sum;
  return p;
}

double SampleWeight(const ClassWeights& w, int label) { return w ? (*w)[label] : 1.0; }

template <typename Scalar>
BackwardResult<Scalar> Run(std::span<const Sample* const> batch, const ModelParams<Scalar>& params,
                           const ModelConfig& cfg, const ClassWeights& weights, bool with_grad) {
  if (batch.empty()) throw Error(ErrorCode::kConfigError, "empty batch");
  cfg.Validate();
  for (const Sample* s : batch) CheckLabel(s->label);
  double weight_sum = 0.0;
  for (const Sample* s : batch) weight_sum += SampleWeight(weights, s->label);

  BackwardResult<Scalar> out;
  if (with_grad) out.grads = ZerosLike(params);
  out.forward.logits.resize(static_cast<Eigen::Index>(batch.size()), 7);
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Sample& s = *batch[i];
    Tape<Scalar> tape(params, with_grad ? &out.grads : nullptr);
    Graph<Scalar> graph(tape, cfg);
    const auto logits = graph.Logits(s);
    const Matrix<Scalar>& z = tape.value(logits);
    out.forward.logits.row(static_cast<Eigen::Index>(i)) = z.row(0);
    const auto probs = Softmax(z);
    const double w = SampleWeight(weights, s.label) / weight_sum;
    loss += -w * std::log(std::max(probs[s.label], 1e-300));
    if (with_grad) {
      Matrix<Scalar> seed(1, 7);
      for (int c = 0; c < 7; ++c) {
        seed(0, c) = static_cast<Scalar>(w * (probs[c] - (c == s.label ? 1.0 : 0.0)));
      }
      tape.Backward(logits, seed);
    }
  }
  out.forward.loss = static_cast<Scalar>(loss);
  return out;
}

std::vector<const Sample*> Borrow(std::span<const Sample> batch) {
  std::vector<const Sample*> out;
  out.reserve(batch.size());
  for (const auto& s : batch) out.push_back(&s);
  return out;
}

}  // namespace

VisionInput PrepareVision(const percept::DeltaSequence& delta, const ModelConfig& cfg) {
  cfg.Validate();
  const int p = cfg.patch_side;
  const int s = delta.side;
  if (s <= 0 || s % p != 0) {
    throw Error(ErrorCode::kConfigError, "crop side " + std::to_string(s) +
                                             " is not a multiple of patch side " +
                                             std::to_string(p));
  }
  if (s != cfg.crop_side) {
    throw Error(ErrorCode::kConfigError, "crop side " + std::to_string(s) +
                                             " differs from the model's " +
                                             std::to_string(cfg.crop_side));
  }
  const int frames = static_cast<int>(delta.frames.size());
  if (frames > cfg.max_frames) {
    throw Error(ErrorCode::kConfigError, "more frames than the model supports");
  }
  VisionInput out;
  out.frames = frames;
  out.patch_dim = cfg.patch_dim();
  out.patch_means.assign(static_cast<std::size_t>(frames) * out.patch_dim, 0.0);
  const double inv_patches = 1.0 / (static_cast<double>(s / p) * (s / p));
  for (int f = 0; f < frames; ++f) {
    const auto& px = delta.frames[static_cast<std::size_t>(f)];
    if (px.size() != static_cast<std::size_t>(s) * s * 3) {
      throw Error(ErrorCode::kConfigError, "delta frame has the wrong size");
    }
    double* row = out.patch_means.data() + static_cast<std::size_t>(f) * out.patch_dim;
    for (int y = 0; y < s; ++y) {
      for (int x = 0; x < s; ++x) {
        const int within = ((y % p) * p + (x % p)) * 3;
        for (int c = 0; c < 3; ++c) {
          row[within + c] += px[(static_cast<std::size_t>(y) * s + x) * 3 + c];
        }
      }
    }
    for (int i = 0; i < out.patch_dim; ++i) row[i] *= inv_patches;
  }
  return out;
}

Sample MakeSample(std::vector<int> tokens, const std::optional<percept::DeltaSequence>& delta,
                  int label, const ModelConfig& cfg) {
  Sample s;
  s.tokens = std::move(tokens);
  if (delta && !delta->frames.empty()) s.vision = PrepareVision(*delta, cfg);
  s.label = label;
  return s;
}

template <typename Scalar>
Matrix<Scalar> EncodeVision(const percept::DeltaSequence& delta, const ModelParams<Scalar>& params,
                            const ModelConfig& cfg) {
  cfg.Validate();
  const VisionInput vision = PrepareVision(delta, cfg);
  if (vision.frames == 0) return Matrix<Scalar>(0, cfg.d_model);
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg);
  return tape.value(g.VisionFeatures(vision));
}

template <typename Scalar>
Matrix<Scalar> SelfAttend(const Matrix<Scalar>& x, const ModelParams<Scalar>& params,
                          const std::string& prefix, const ModelConfig& cfg,
                          AttentionTrace<Scalar>* trace) {
  cfg.Validate();
  if (x.rows() < 1) throw Error(ErrorCode::kConfigError, "self-attention needs at least one row");
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg, trace);
  return tape.value(g.SelfLayer(tape.Constant(x), prefix));
}

template <typename Scalar>
Matrix<Scalar> EncodeText(std::span<const int> tokens, const ModelParams<Scalar>& params,
                          const ModelConfig& cfg) {
  cfg.Validate();
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg);
  return tape.value(g.TextStack(tokens));
}

template <typename Scalar>
Matrix<Scalar> EncodeVisionStack(const VisionInput* vision,
                                 const ModelParams<Scalar>& params, const ModelConfig& cfg) {
  cfg.Validate();
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg);
  const auto v = g.VisionStack(vision);
  if (v == Graph<Scalar>::kNone) return Matrix<Scalar>(0, cfg.d_model);
  return tape.value(v);
}

template <typename Scalar>
Matrix<Scalar> CrossmodalFuse(const Matrix<Scalar>& vision, const Matrix<Scalar>& text,
                              const ModelParams<Scalar>& params, const ModelConfig& cfg,
                              AttentionTrace<Scalar>* trace) {
  cfg.Validate();
  if (text.rows() == 0) throw Error(ErrorCode::kNoTextInput, "text features are empty");
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg, trace);
  const auto v = vision.rows() == 0 ? Graph<Scalar>::kNone : tape.Constant(vision);
  return tape.value(g.Fuse(v, tape.Constant(text)));
}

template <typename Scalar>
ForwardResult<Scalar> Forward(std::span<const Sample> batch, const ModelParams<Scalar>& params,
                              const ModelConfig& cfg, const ClassWeights& weights) {
  return Run<Scalar>(Borrow(batch), params, cfg, weights, false).forward;
}

template <typename Scalar>
BackwardResult<Scalar> Backward(std::span<const Sample> batch, const ModelParams<Scalar>& params,
                                const ModelConfig& cfg, const ClassWeights& weights) {
  return Run<Scalar>(Borrow(batch), params, cfg, weights, true);
}

template <typename Scalar>
BackwardResult<Scalar> Backward(std::span<const Sample* const> batch,
                                const ModelParams<Scalar>& params, const ModelConfig& cfg,
                                const ClassWeights& weights) {
  return Run<Scalar>(batch, params, cfg, weights, true);
}

template <typename Scalar>
std::array<double, 7> Predict(const Sample& sample, const ModelParams<Scalar>& params,
                              const ModelConfig& cfg) {
  cfg.Validate();
  Tape<Scalar> tape(params);
  Graph<Scalar> g(tape, cfg);
  return Softmax(tape.value(g.Logits(sample)));
}

ClassWeights InverseFrequencyWeights(std::span<const Sample> data) {
  std::array<double, 7> counts{};
  for (const auto& s : data) {
    CheckLabel(s.label);
    counts[s.label] += 1.0;
  }
  std::array<double, 7> w{};
  double sum = 0.0;
  int present = 0;
  for (int c = 0; c < 7; ++c) {
    if (counts[c] > 0) {
      w[c] = 1.0 / counts[c];
      sum += w[c];
      ++present;
    }
  }
  if (present == 0) return std::nullopt;
  for (int c = 0; c < 7; ++c) w[c] = counts[c] > 0 ? w[c] * present / sum : 0.0;
  return w;
}

GradCheckReport GradCheck(std::span<const Sample> batch, const ModelParams<double>& params,
                          const ModelConfig& cfg, double eps, double floor) {
  const auto analytic = Backward<double>(batch, params, cfg).grads;
  ModelParams<double> probe = params;
  GradCheckReport report;
  for (auto& [name, tensor] : probe) {
    GradCheckEntry entry;
    entry.name = name;
    entry.elements = tensor.data.size();
    const auto& grad = analytic.at(name).data;
    for (std::size_t i = 0; i < tensor.data.size(); ++i) {
      const double saved = tensor.data[i];
      tensor.data[i] = saved + eps;
      const double up = Forward<double>(batch, probe, cfg).loss;
      tensor.data[i] = saved - eps;
      const double down = Forward<double>(batch, probe, cfg).loss;
      tensor.data[i] = saved;
      const double numeric = (up - down) / (2 * eps);
      const double a = grad[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      entry.max_rel_error = std::max(entry.max_rel_error, rel);
      entry.max_abs_grad = std::max(entry.max_abs_grad, std::abs(a));
    }
    report.max_rel_error = std::max(report.max_rel_error, entry.max_rel_error);
    report.entries.push_back(std::move(entry));
  }
  return report;
}

ModelConfig GradCheckConfig(int d_model) {
  ModelConfig cfg;
  cfg.d_model = d_model;
  cfg.heads = 2;
  cfg.vision_layers = 1;
  cfg.text_layers = 1;
  cfg.fusion_layers = 1;
  cfg.patch_side = 4;
  cfg.crop_side = 8;
  cfg.max_frames = 4;
  cfg.max_tokens = 8;
  cfg.vocab_size = 64;
  return cfg;
}

std::vector<Sample> RandomBatch(const ModelConfig& cfg, std::size_t batch, int frames, int tokens,
                                std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Sample> out;
  const std::size_t px = static_cast<std::size_t>(cfg.crop_side) * cfg.crop_side * 3;
  for (std::size_t b = 0; b < batch; ++b) {
    Sample s;
    for (int t = 0; t < tokens; ++t) s.tokens.push_back(static_cast<int>(rng.Below(cfg.vocab_size)));
    if (frames > 0) {
      percept::DeltaSequence d;
      d.side = cfg.crop_side;
      for (int f = 0; f < frames; ++f) {
        std::vector<double> v(px);
        for (auto& x : v) x = rng.Uniform(-1.0, 1.0);
        d.frames.push_back(std::move(v));
        d.source_seqs.push_back(static_cast<std::uint64_t>(f));
      }
      s.vision = PrepareVision(d, cfg);
    }
    s.label = static_cast<int>(rng.Below(7));
    out.push_back(std::move(s));
  }
  return out;
}

#define AFFECTLINK_INSTANTIATE(S)                                                              \
  template Matrix<S> EncodeVision<S>(const percept::DeltaSequence&, const ModelParams<S>&,     \
                                     const ModelConfig&);                                      \
  template Matrix<S> SelfAttend<S>(const Matrix<S>&, const ModelParams<S>&,                    \
                                   const std::string&, const ModelConfig&, AttentionTrace<S>*); \
  template Matrix<S> EncodeText<S>(std::span<const int>, const ModelParams<S>&,                \
                                   const ModelConfig&);                                        \
  template Matrix<S> EncodeVisionStack<S>(const VisionInput*, const ModelParams<S>&,         \
                                          const ModelConfig&);                                 \
  template Matrix<S> CrossmodalFuse<S>(const Matrix<S>&, const Matrix<S>&,                     \
                                       const ModelParams<S>&, const ModelConfig&,              \
                                       AttentionTrace<S>*);                                    \
  template ForwardResult<S> Forward<S>(std::span<const Sample>, const ModelParams<S>&,         \
                                       const ModelConfig&, const ClassWeights&);               \
  template BackwardResult<S> Backward<S>(std::span<const Sample>, const ModelParams<S>&,       \
                                         const ModelConfig&, const ClassWeights&);             \
  template BackwardResult<S> Backward<S>(std::span<const Sample* const>, const ModelParams<S>&, \
                                         const ModelConfig&, const ClassWeights&);             \
  template std::array<double, 7> Predict<S>(const Sample&, const ModelParams<S>&,              \
                                            const ModelConfig&);

AFFECTLINK_INSTANTIATE(float)
AFFECTLINK_INSTANTIATE(double)

#undef AFFECTLINK_INSTANTIATE

}  // namespace affectlink::vl2e
