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

#include "affectlink/harness/pipeline.hpp"

#include <cstring>
#include <limits>

#include "affectlink/harness/glyph.hpp"

namespace affectlink::harness {
namespace {

// Word-at-a-time FNV-1a variant; only used to compare stage outputs.
class Hasher {
 public:
  void Bytes(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
      std::uint64_t w;
      std::memcpy(&w, p + i, 8);
      Word(w);
    }
    std::uint64_t tail = 0;
    std::memcpy(&tail, p + i, n - i);
    Word(tail ^ (static_cast<std::uint64_t>(n - i) << 56));
  }
  template <typename T>
  void Value(const T& v) {
    Bytes(&v, sizeof v);
  }
  void Box(const percept::FaceBox& b) {
    Value(b.x);
    Value(b.y);
    Value(b.w);
    Value(b.h);
    Value(b.confidence);
  }
  std::uint64_t digest() const { return h_; }

 private:
  void Word(std::uint64_t w) {
    h_ ^= w;
    h_ *= 0x100000001b3ULL;
    h_ ^= h_ >> 29;
  }
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

std::uint64_t HashDelta(const std::optional<percept::DeltaSequence>& d) {
  Hasher h;
  if (!d) {
    h.Value(std::uint8_t{0});
    return h.digest();
  }
  h.Value(d->side);
  h.Value(static_cast<int>(d->neutral_used));
  for (const auto& f : d->frames) h.Bytes(f.data(), f.size() * sizeof(double));
  return h.digest();
}

}  // namespace

std::optional<EmotionLabel> StubClassifier::KeywordEmotion(const std::string& utterance) {
  const context::Tokenizer tok;
  for (const auto& word : tok.Split(utterance)) {
    for (int e = 0; e < kNumEmotions; ++e) {
      for (const auto kw : EmotionKeywords()[static_cast<std::size_t>(e)]) {
        if (word == kw) return EmotionFromId(e);
      }
    }
  }
  return std::nullopt;
}

EmotionLabel StubClassifier::GlyphEmotion(const std::vector<double>& delta_frame, int side) {
  std::array<double, kGlyphCellSize> cell{};
  std::array<int, kGlyphCellSize> count{};
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < 3; ++c) {
        const auto k = static_cast<std::size_t>(((y % kGlyphPeriod) * kGlyphPeriod + x % kGlyphPeriod) * 3 + c);
        cell[k] += delta_frame[(static_cast<std::size_t>(y) * side + x) * 3 + c];
        ++count[k];
      }
    }
  }
  for (std::size_t k = 0; k < cell.size(); ++k) {
    if (count[k] > 0) cell[k] /= count[k];
  }
  EmotionLabel best = EmotionLabel::kNeutral;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int e = 0; e < kNumEmotions; ++e) {
    const auto tmpl = GlyphDeltaCell(EmotionFromId(e));
    double dist = 0.0;
    for (std::size_t k = 0; k < cell.size(); ++k) dist += (cell[k] - tmpl[k]) * (cell[k] - tmpl[k]);
    if (dist < best_dist) {
      best_dist = dist;
      best = EmotionFromId(e);
    }
  }
  return best;
}

EmotionDistribution StubClassifier::Peaked(EmotionLabel label) {
  EmotionDistribution p;
  p.fill(0.02);
  p[static_cast<std::size_t>(EmotionId(label))] = 0.88;
  return p;
}

EmotionDistribution StubClassifier::Classify(const ClassifierInput& input) const {
  if (input.text_enabled) {
    if (auto e = KeywordEmotion(input.turn.text)) return Peaked(*e);
  }
  if (input.vision && !input.vision->empty()) {
    return Peaked(GlyphEmotion(input.vision->frames.back(), input.vision->side));
  }
  return Peaked(EmotionLabel::kNeutral);
}

Vl2eClassifier::Vl2eClassifier(vl2e::ModelParams<double> params, const vl2e::ModelConfig& cfg)
    : params_(std::move(params)), cfg_(cfg) {
  vl2e::CheckParamsMatch(params_, cfg_);
}

EmotionDistribution Vl2eClassifier::Classify(const ClassifierInput& input) const {
  std::vector<int> tokens(input.tokens.begin(), input.tokens.end());
  const auto max_tokens = static_cast<std::size_t>(cfg_.max_tokens);
  if (tokens.size() > max_tokens) {
    tokens.erase(tokens.begin(), tokens.end() - static_cast<std::ptrdiff_t>(max_tokens));
  }
  const auto sample = vl2e::MakeSample(std::move(tokens), input.vision, 0, cfg_);
  return vl2e::Predict(sample, params_, cfg_);
}

Pipeline::Pipeline(PipelineConfig cfg, std::shared_ptr<const percept::FaceDetector> detector,
                   std::shared_ptr<const Classifier> classifier)
    : cfg_(std::move(cfg)),
      detector_(std::move(detector)),
      classifier_(std::move(classifier)),
      tokenizer_(cfg_.vocab_size),
      history_(cfg_.history_retention) {
  cfg_.percept.Validate();
}

PreparedTurn Pipeline::Prepare(const context::Turn& turn,
                               const std::vector<wire::FrameMsg>& snapshot) {
  history_.Push(turn);
  PreparedTurn out;
  out.turn = turn;
  out.context = context::BuildContext(history_, cfg_.context);
  if (cfg_.use_text) {
    out.tokens = tokenizer_.Tokenize(out.context, cfg_.context.max_tokens);
  } else {
    out.tokens = {context::Tokenizer::kMaskId};
  }

  percept::ExtractionTrace xt;
  auto delta = percept::ExtractFaceSequence(snapshot, *detector_, cfg_.percept, cfg_.extract, &xt);

  Hasher snap;
  for (const auto& f : snapshot) {
    snap.Value(f.seq);
    snap.Value(f.timestamp_us);
    snap.Value(f.width);
    snap.Value(f.height);
    snap.Bytes(f.pixels.data(), f.pixels.size());
  }
  Hasher det;
  Hasher sel;
  for (std::size_t i = 0; i < xt.seqs.size(); ++i) {
    det.Value(xt.seqs[i]);
    for (const auto& b : xt.detections[i]) det.Box(b);
    det.Value(std::uint8_t{0xff});
    sel.Value(xt.seqs[i]);
    if (xt.chosen[i]) sel.Box(*xt.chosen[i]);
    sel.Value(std::uint8_t{0xff});
  }
  Hasher ctx;
  ctx.Bytes(out.context.text.data(), out.context.text.size());
  Hasher tok;
  tok.Bytes(out.tokens.data(), out.tokens.size() * sizeof(context::TokenId));

  out.trace.snapshot = snap.digest();
  out.trace.detections = det.digest();
  out.trace.selection = sel.digest();
  out.trace.delta = HashDelta(delta);
  if (!cfg_.use_vision) delta.reset();
  out.trace.vision_input = HashDelta(delta);
  out.trace.context = ctx.digest();
  out.trace.tokens = tok.digest();
  out.vision = std::move(delta);
  return out;
}

TurnResult Pipeline::HandleTurn(const context::Turn& turn,
                                const std::vector<wire::FrameMsg>& snapshot) {
  const PreparedTurn prep = Prepare(turn, snapshot);
  TurnResult r;
  r.turn = turn;
  r.probabilities = classifier_->Classify(
      ClassifierInput{prep.turn, prep.context, prep.tokens, prep.vision, cfg_.use_text});
  r.label = ArgmaxEmotion(r.probabilities);
  r.command = empathy::MapEmotion(r.label, turn.index, turn.end_ts_us);
  r.trace = prep.trace;
  r.visual_evidence = prep.vision.has_value();
  r.context_text = prep.context.text;
  return r;
}

void Pipeline::Reset() { history_ = context::DialogueHistory(cfg_.history_retention); }

context::Turn TurnFromWire(const wire::TurnMsg& msg) {
  context::Turn t;
  t.index = msg.turn_index;
  if (msg.speaker && !msg.speaker->empty()) t.speaker = msg.speaker;
  t.text = msg.text;
  t.start_ts_us = msg.start_ts_us;
  t.end_ts_us = msg.end_ts_us;
  return t;
}

wire::TurnMsg TurnToWire(const context::Turn& turn) {
  wire::TurnMsg m;
  m.turn_index = turn.index;
  m.speaker = turn.speaker;
  m.text = turn.text;
  m.start_ts_us = turn.start_ts_us;
  m.end_ts_us = turn.end_ts_us;
  return m;
}

}  // namespace affectlink::harness
