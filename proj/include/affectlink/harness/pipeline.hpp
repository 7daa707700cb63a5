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

#ifndef AFFECTLINK_HARNESS_PIPELINE_HPP
#define AFFECTLINK_HARNESS_PIPELINE_HPP

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "affectlink/context/dialogue.hpp"
#include "affectlink/context/tokenizer.hpp"
#include "affectlink/empathy/expression.hpp"
#include "affectlink/percept/face.hpp"
#include "affectlink/vl2e/model.hpp"
#include "affectlink/wire/protocol.hpp"

namespace affectlink::harness {

struct ClassifierInput {
  const context::Turn& turn;
  const context::ContextString& context;
  const std::vector<context::TokenId>& tokens;
  const std::optional<percept::DeltaSequence>& vision;
  bool text_enabled = true;
};

class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual EmotionDistribution Classify(const ClassifierInput& input) const = 0;
};

// Deterministic reference classifier. The first emotion keyword in the
// current utterance decides; otherwise the last delta frame is matched to
// the nearest glyph template; with neither, neutral.
class StubClassifier : public Classifier {
 public:
  EmotionDistribution Classify(const ClassifierInput& input) const override;

  static std::optional<EmotionLabel> KeywordEmotion(const std::string& utterance);
  static EmotionLabel GlyphEmotion(const std::vector<double>& delta_frame, int side);
  static EmotionDistribution Peaked(EmotionLabel label);
};

class Vl2eClassifier : public Classifier {
 public:
  Vl2eClassifier(vl2e::ModelParams<double> params, const vl2e::ModelConfig& cfg);
  EmotionDistribution Classify(const ClassifierInput& input) const override;
  const vl2e::ModelConfig& config() const { return cfg_; }
  const vl2e::ModelParams<double>& params() const { return params_; }

 private:
  vl2e::ModelParams<double> params_;
  vl2e::ModelConfig cfg_;
};

struct PipelineConfig {
  context::ContextConfig context;
  percept::PerceptConfig percept;
  percept::ExtractOptions extract;
  bool use_vision = true;
  bool use_text = true;
  std::size_t vocab_size = 4096;
  std::size_t history_retention = 16;
};

// FNV-1a hashes of each stage's output, for isolation checks.
struct StageTrace {
  std::uint64_t snapshot = 0;
  std::uint64_t detections = 0;
  std::uint64_t selection = 0;
  std::uint64_t delta = 0;
  std::uint64_t vision_input = 0;
  std::uint64_t context = 0;
  std::uint64_t tokens = 0;
  friend bool operator==(const StageTrace&, const StageTrace&) = default;
};

struct PreparedTurn {
  context::Turn turn;
  context::ContextString context;
  std::vector<context::TokenId> tokens;
  std::optional<percept::DeltaSequence> vision;  // after the vision toggle
  StageTrace trace;
};

struct TurnResult {
  context::Turn turn;
  EmotionDistribution probabilities{};
  EmotionLabel label = EmotionLabel::kNeutral;
  empathy::ExpressionCommand command;
  StageTrace trace;
  bool visual_evidence = false;
  std::string context_text;
};

// Per-turn processing: dialogue context, active-face extraction, classify,
// map to an expression. Not thread-safe; the history is confined to the
// caller's thread.
class Pipeline {
 public:
  Pipeline(PipelineConfig cfg, std::shared_ptr<const percept::FaceDetector> detector,
           std::shared_ptr<const Classifier> classifier);

  // Appends the turn to the history and builds the classifier input.
  PreparedTurn Prepare(const context::Turn& turn, const std::vector<wire::FrameMsg>& snapshot);
  TurnResult HandleTurn(const context::Turn& turn, const std::vector<wire::FrameMsg>& snapshot);
  void Reset();

  const PipelineConfig& config() const { return cfg_; }

 private:
  PipelineConfig cfg_;
  std::shared_ptr<const percept::FaceDetector> detector_;
  std::shared_ptr<const Classifier> classifier_;
  context::Tokenizer tokenizer_;
  context::DialogueHistory history_;
};

context::Turn TurnFromWire(const wire::TurnMsg& msg);
wire::TurnMsg TurnToWire(const context::Turn& turn);

}  // namespace affectlink::harness

#endif  // AFFECTLINK_HARNESS_PIPELINE_HPP
