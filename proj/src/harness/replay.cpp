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

#include "affectlink/harness/replay.hpp"

#include <algorithm>
#include <sstream>

#include "affectlink/error.hpp"

namespace affectlink::harness {
namespace {

using Clock = std::chrono::steady_clock;

class NullClassifier : public Classifier {
 public:
  EmotionDistribution Classify(const ClassifierInput&) const override {
    return StubClassifier::Peaked(EmotionLabel::kNeutral);
  }
};

}  // namespace

std::vector<wire::ScheduledTurn> ScriptSource::Turns() const {
  std::vector<wire::ScheduledTurn> out;
  for (const auto& t : script_.turns) out.push_back({TurnToWire(t.turn), t.last_seq});
  return out;
}

wire::TurnHandler MakeTurnHandler(Pipeline& pipeline, std::vector<TurnResult>* results) {
  return [&pipeline, results](const wire::TurnMsg& msg, const std::vector<wire::FrameMsg>& snapshot) {
    TurnResult r = pipeline.HandleTurn(TurnFromWire(msg), snapshot);
    wire::HandlerResult out{r.command, r.probabilities};
    if (results != nullptr) results->push_back(std::move(r));
    return out;
  };
}

std::vector<int> GoldLabels(const SessionScript& script) {
  std::vector<int> golds;
  for (const auto& t : script.turns) {
    if (!t.turn.gold_emotion) {
      throw Error(ErrorCode::kEvalError, "turn " + std::to_string(t.turn.index) + " has no gold emotion");
    }
    golds.push_back(EmotionId(*t.turn.gold_emotion));
  }
  return golds;
}

std::vector<int> DialogueIds(const SessionScript& script) {
  std::vector<int> ids;
  for (const auto& t : script.turns) ids.push_back(t.dialogue);
  return ids;
}

ReplayResult ReplaySession(const SessionScript& script, Pipeline& pipeline, ReplayMode mode,
                           const ReplayOptions& options) {
  ReplayResult out;
  out.log.session_id = script.session_id;
  if (mode == ReplayMode::kOffline) {
    const auto start = Clock::now();
    for (const auto& t : script.turns) {
      const auto frames = script.FramesInWindow(t.turn.start_ts_us, t.turn.end_ts_us);
      const auto begin = Clock::now();
      TurnResult r = pipeline.HandleTurn(t.turn, frames);
      wire::ReceivedCommand rc;
      rc.command = empathy::ToWire(r.command);
      rc.latency_ms = std::chrono::duration<double, std::milli>(Clock::now() - begin).count();
      rc.arrival_us = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - start).count());
      out.log.commands.push_back(rc);
      out.predictions.push_back(EmotionId(r.label));
      out.turns.push_back(std::move(r));
    }
    out.log.frames_sent = script.frame_count;
    out.log.turns_sent = script.turns.size();
    out.log.duration_s = std::chrono::duration<double>(Clock::now() - start).count();
    return out;
  }

  wire::EdgeServerConfig server_cfg;
  server_cfg.listen = {"127.0.0.1", 0};
  wire::EdgeServer server(server_cfg, MakeTurnHandler(pipeline, &out.turns));
  server.Start();
  wire::SimulatorConfig sim;
  sim.target = {"127.0.0.1", server.port()};
  sim.fps = options.fps > 0.0 ? options.fps : script.fps;
  sim.response_timeout = options.response_timeout;
  const ScriptSource source(script);
  try {
    out.log = wire::RunRobotSimulator(source, sim);
  } catch (const wire::TransportFailure& e) {
    out.log = e.log();
    out.partial = true;
    out.error = e.what();
  }
  server.WaitForSessions(1, std::chrono::milliseconds(5000));
  server.Stop();
  out.server = server.stats();
  out.server_errors = server.error_log();

  out.predictions.assign(script.turns.size(), -1);
  for (const auto& c : out.log.commands) {
    for (std::size_t i = 0; i < script.turns.size(); ++i) {
      if (script.turns[i].turn.index == c.command.turn_index) out.predictions[i] = c.command.expression;
    }
  }
  if (std::count(out.predictions.begin(), out.predictions.end(), -1) > 0) out.partial = true;
  return out;
}

EvalReport Evaluate(const SessionScript& script, Pipeline& pipeline, const std::string& name) {
  const auto result = ReplaySession(script, pipeline, ReplayMode::kOffline);
  return MakeReport(name, result.predictions, GoldLabels(script), DialogueIds(script));
}

std::vector<vl2e::Sample> BuildDataset(const SessionScript& script, const PipelineConfig& cfg,
                                       std::shared_ptr<const percept::FaceDetector> detector,
                                       const vl2e::ModelConfig& model_cfg) {
  Pipeline pipeline(cfg, std::move(detector), std::make_shared<NullClassifier>());
  const auto golds = GoldLabels(script);
  std::vector<vl2e::Sample> samples;
  samples.reserve(script.turns.size());
  for (std::size_t i = 0; i < script.turns.size(); ++i) {
    const auto& t = script.turns[i].turn;
    auto prep = pipeline.Prepare(t, script.FramesInWindow(t.start_ts_us, t.end_ts_us));
    std::vector<int> tokens(prep.tokens.begin(), prep.tokens.end());
    const auto max_tokens = static_cast<std::size_t>(model_cfg.max_tokens);
    if (tokens.size() > max_tokens) {
      tokens.erase(tokens.begin(), tokens.end() - static_cast<std::ptrdiff_t>(max_tokens));
    }
    samples.push_back(vl2e::MakeSample(std::move(tokens), prep.vision, golds[i], model_cfg));
  }
  return samples;
}

std::string AblationToggles::Name() const {
  std::vector<std::string> off;
  if (!active_selection) off.push_back("w/o active selection");
  if (!neutral_norm) off.push_back("w/o neutral norm");
  if (!vision) off.push_back("w/o vision");
  if (!text) off.push_back("w/o text");
  if (off.empty()) return "full";
  std::string name = off.front();
  for (std::size_t i = 1; i < off.size(); ++i) name += ", " + off[i];
  return name;
}

PipelineConfig AblationToggles::Apply(PipelineConfig base) const {
  base.extract.selection = active_selection ? percept::SelectionPolicy::kCentered : percept::SelectionPolicy::kRandom;
  base.extract.neutral_normalization = neutral_norm;
  base.use_vision = vision;
  base.use_text = text;
  return base;
}

std::vector<AblationToggles> StandardAblations() {
  return {{true, true, true, true},
          {false, true, true, true},
          {true, false, true, true},
          {true, true, false, true},
          {true, true, true, false}};
}

std::vector<AblationToggles> ParseAblations(const std::string& list) {
  std::vector<AblationToggles> out;
  std::stringstream in(list);
  for (std::string item; std::getline(in, item, ',');) {
    if (item.empty()) continue;
    AblationToggles t;
    if (item == "full") {
    } else if (item == "no-selection") {
      t.active_selection = false;
    } else if (item == "no-norm") {
      t.neutral_norm = false;
    } else if (item == "no-vision") {
      t.vision = false;
    } else if (item == "no-text") {
      t.text = false;
    } else {
      throw Error(ErrorCode::kInvalidConfig, "unknown toggle '" + item + "'");
    }
    out.push_back(t);
  }
  if (out.empty()) throw Error(ErrorCode::kInvalidConfig, "no toggles given");
  return out;
}

std::vector<AblationRun> RunAblation(const SessionScript& script, const PipelineConfig& base,
                                     std::shared_ptr<const percept::FaceDetector> detector,
                                     std::shared_ptr<const Classifier> classifier,
                                     const std::vector<AblationToggles>& toggles) {
  std::vector<Pipeline> pipelines;
  std::vector<AblationRun> runs(toggles.size());
  for (std::size_t k = 0; k < toggles.size(); ++k) {
    pipelines.emplace_back(toggles[k].Apply(base), detector, classifier);
    runs[k].toggles = toggles[k];
  }
  for (const auto& t : script.turns) {
    const auto frames = script.FramesInWindow(t.turn.start_ts_us, t.turn.end_ts_us);
    for (std::size_t k = 0; k < toggles.size(); ++k) {
      const auto r = pipelines[k].HandleTurn(t.turn, frames);
      runs[k].predictions.push_back(EmotionId(r.label));
      runs[k].traces.push_back(r.trace);
    }
  }
  const auto golds = GoldLabels(script);
  const auto dialogues = DialogueIds(script);
  for (auto& run : runs) run.report = MakeReport(run.toggles.Name(), run.predictions, golds, dialogues);
  return runs;
}

}  // namespace affectlink::harness
