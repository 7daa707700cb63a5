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

#ifndef AFFECTLINK_HARNESS_REPLAY_HPP
#define AFFECTLINK_HARNESS_REPLAY_HPP

#include <chrono>
#include <memory>
#include <string>
#include <vector>

#include "affectlink/harness/metrics.hpp"
#include "affectlink/harness/pipeline.hpp"
#include "affectlink/harness/session.hpp"
#include "affectlink/vl2e/model.hpp"
#include "affectlink/wire/edge_server.hpp"
#include "affectlink/wire/robot_simulator.hpp"

namespace affectlink::harness {

// Streams a script's frames and turns; each turn follows its last frame.
class ScriptSource : public wire::SimulatorSource {
 public:
  explicit ScriptSource(const SessionScript& script) : script_(script) {}
  wire::SessionMetaMsg Meta() const override { return script_.Meta(); }
  std::uint64_t FrameCount() const override { return script_.frame_count; }
  wire::FrameMsg Frame(std::uint64_t index) const override { return script_.Frame(index); }
  std::vector<wire::ScheduledTurn> Turns() const override;

 private:
  const SessionScript& script_;
};

// Adapts a pipeline to the edge server. Results are appended to `results`
// when it is non-null (calls are serialized by the server).
wire::TurnHandler MakeTurnHandler(Pipeline& pipeline, std::vector<TurnResult>* results = nullptr);

enum class ReplayMode { kLive, kOffline };

struct ReplayOptions {
  double fps = 0.0;  // 0: the script's own rate
  std::chrono::milliseconds response_timeout{30000};
};

struct ReplayResult {
  std::vector<int> predictions;  // script turn order; -1 when no command arrived
  std::vector<TurnResult> turns;  // pipeline outputs, in handling order
  wire::SessionLog log;
  wire::ServerStats server;  // live mode only
  std::vector<std::string> server_errors;
  bool partial = false;
  std::string error;
};

// Live mode runs the edge server and the robot simulator over loopback;
// offline mode calls the pipeline directly on the frames of each turn window.
ReplayResult ReplaySession(const SessionScript& script, Pipeline& pipeline, ReplayMode mode,
                           const ReplayOptions& options = {});

std::vector<int> GoldLabels(const SessionScript& script);
std::vector<int> DialogueIds(const SessionScript& script);

// Offline replay scored against the gold labels.
EvalReport Evaluate(const SessionScript& script, Pipeline& pipeline, const std::string& name);

// Model inputs for every turn, built by the same stages the pipeline runs.
std::vector<vl2e::Sample> BuildDataset(const SessionScript& script, const PipelineConfig& cfg,
                                       std::shared_ptr<const percept::FaceDetector> detector,
                                       const vl2e::ModelConfig& model_cfg);

struct AblationToggles {
  bool active_selection = true;
  bool neutral_norm = true;
  bool vision = true;
  bool text = true;

  std::string Name() const;
  PipelineConfig Apply(PipelineConfig base) const;
};

// Full pipeline followed by one row per disabled stage.
std::vector<AblationToggles> StandardAblations();
// Parses a comma list of "full", "no-selection", "no-norm", "no-vision",
// "no-text"; throws Error{kInvalidConfig}.
std::vector<AblationToggles> ParseAblations(const std::string& list);

struct AblationRun {
  AblationToggles toggles;
  EvalReport report;
  std::vector<int> predictions;
  std::vector<StageTrace> traces;
};

// Every toggle set sees the same rendered frames turn by turn.
std::vector<AblationRun> RunAblation(const SessionScript& script, const PipelineConfig& base,
                                     std::shared_ptr<const percept::FaceDetector> detector,
                                     std::shared_ptr<const Classifier> classifier,
                                     const std::vector<AblationToggles>& toggles);

}  // namespace affectlink::harness

#endif  // AFFECTLINK_HARNESS_REPLAY_HPP
