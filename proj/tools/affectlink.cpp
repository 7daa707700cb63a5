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

// Command-line front end: serve, simulate, gen, train, eval, replay, ablate,
// gradcheck.

#include <CLI11.hpp>
#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <thread>

#include "affectlink/error.hpp"
#include "affectlink/harness/replay.hpp"
#include "affectlink/vl2e/model_io.hpp"
#include "affectlink/vl2e/trainer.hpp"

namespace {

using namespace affectlink;
using namespace affectlink::harness;

std::atomic<bool> g_interrupted{false};

void OnSignal(int) { g_interrupted = true; }

struct ClassifierOptions {
  std::string model;
  bool stub = false;
  int heads = 4;
  int k = 4;
  bool named = false;
  std::string detector = "blob";
};

void AddClassifierOptions(CLI::App* cmd, ClassifierOptions& o) {
  cmd->add_option("--model", o.model, "VL2E model file");
  cmd->add_flag("--stub", o.stub, "Use the keyword/glyph stub classifier instead of a model");
  cmd->add_option("--heads", o.heads, "Attention heads of the model")->capture_default_str();
  cmd->add_option("--k", o.k, "Context window in turns")->capture_default_str();
  cmd->add_flag("--named", o.named, "Prefix turns with speaker names");
  cmd->add_option("--detector", o.detector, "Face detector: blob or annotated")
      ->check(CLI::IsMember({"blob", "annotated"}))
      ->capture_default_str();
}

struct Built {
  PipelineConfig cfg;
  std::shared_ptr<const Classifier> classifier;
};

Built BuildClassifier(const ClassifierOptions& o) {
  Built b;
  b.cfg.context.k = o.k;
  b.cfg.context.named = o.named;
  if (o.stub) {
    b.classifier = std::make_shared<StubClassifier>();
    return b;
  }
  if (o.model.empty()) throw Error(ErrorCode::kConfigError, "give --model PATH or --stub");
  auto params = vl2e::LoadParams<double>(o.model);
  const auto mcfg = vl2e::InferConfig(params, o.heads);
  vl2e::CheckParamsMatch(params, mcfg);
  b.cfg.context.max_tokens = static_cast<std::size_t>(mcfg.max_tokens);
  b.cfg.percept.crop_side = mcfg.crop_side;
  b.cfg.percept.max_frames = mcfg.max_frames;
  b.cfg.vocab_size = static_cast<std::size_t>(mcfg.vocab_size);
  b.classifier = std::make_shared<Vl2eClassifier>(std::move(params), mcfg);
  return b;
}

std::shared_ptr<const percept::FaceDetector> MakeDetector(const std::string& kind,
                                                          const SessionScript* script) {
  if (kind == "annotated") {
    if (script == nullptr) throw Error(ErrorCode::kConfigError, "annotated detector needs a script");
    return std::make_shared<percept::AnnotatedDetector>(script->annotations);
  }
  return std::make_shared<percept::BlobDetector>();
}

void WriteText(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(ErrorCode::kConfigError, "cannot write " + path);
  f << text;
}

std::string ReadText(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error(ErrorCode::kConfigError, "cannot read " + path);
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Affective robot link: edge server, robot simulator, VL2E training and evaluation"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error, off")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Run the edge server");
  std::string listen = "127.0.0.1:7300";
  std::string gateway;
  std::size_t buffer = wire::kDefaultRingCapacity;
  std::string console_dir;
  ClassifierOptions serve_opts;
  serve->add_option("--listen", listen, "Robot endpoint HOST:PORT")->capture_default_str();
  serve->add_option("--gateway", gateway, "Console JSON gateway HOST:PORT");
  serve->add_option("--buffer", buffer, "Frame ring capacity T")->capture_default_str();
  serve->add_option("--console", console_dir, "Static console assets served under /console");
  AddClassifierOptions(serve, serve_opts);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Stream a session script to an edge server");
  std::string sim_script;
  std::string target = "127.0.0.1:7300";
  double fps = 25.0;
  std::string sim_log;
  simulate->add_option("--script", sim_script, "Session directory or session.json")->required();
  simulate->add_option("--target", target, "Edge server HOST:PORT")->capture_default_str();
  simulate->add_option("--fps", fps, "Frame rate")->capture_default_str();
  simulate->add_option("--log", sim_log, "Write the session log JSON here (default stdout)");

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic session");
  std::string gen_config;
  std::string gen_out;
  bool render_frames = false;
  gen->add_option("--config", gen_config, "Generator config JSON")->required();
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_flag("--render-frames", render_frames, "Write PPM frames and reference them");

  // train
  auto* train = app.add_subcommand("train", "Train a VL2E model on session scripts");
  std::vector<std::string> train_scripts;
  std::string train_out;
  vl2e::ModelConfig mcfg;
  vl2e::OptimizerConfig ocfg;
  double stop_at = 2.0;
  ClassifierOptions train_opts;
  std::uint64_t init_seed = 0;
  train->add_option("--script", train_scripts, "Session directories (repeatable)")->required();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_option("--d-model", mcfg.d_model)->capture_default_str();
  train->add_option("--heads", mcfg.heads)->capture_default_str();
  train->add_option("--vision-layers", mcfg.vision_layers)->capture_default_str();
  train->add_option("--text-layers", mcfg.text_layers)->capture_default_str();
  train->add_option("--fusion-layers", mcfg.fusion_layers)->capture_default_str();
  train->add_option("--epochs", ocfg.epochs)->capture_default_str();
  train->add_option("--batch", ocfg.batch_size)->capture_default_str();
  train->add_option("--lr", ocfg.peak_lr, "Peak learning rate")->capture_default_str();
  train->add_option("--seed", ocfg.seed, "Shuffle seed")->capture_default_str();
  train->add_option("--init-seed", init_seed, "Parameter init seed")->capture_default_str();
  train->add_flag("--class-weighted", ocfg.class_weighted, "Inverse-frequency class weights");
  train->add_option("--stop-at", stop_at, "Stop once train accuracy reaches this value");
  train->add_option("--k", train_opts.k)->capture_default_str();
  train->add_flag("--named", train_opts.named);
  train->add_option("--detector", train_opts.detector)->check(CLI::IsMember({"blob", "annotated"}));

  // eval
  auto* eval = app.add_subcommand("eval", "Offline evaluation of a session script");
  std::string eval_script;
  std::string eval_json;
  ClassifierOptions eval_opts;
  eval->add_option("--script", eval_script, "Session directory or session.json")->required();
  eval->add_option("--json", eval_json, "Write the report JSON here");
  AddClassifierOptions(eval, eval_opts);

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a session live (loopback) or offline");
  std::string replay_script;
  std::string mode = "offline";
  std::string replay_out;
  double replay_fps = 0.0;
  ClassifierOptions replay_opts;
  replay->add_option("--script", replay_script, "Session directory or session.json")->required();
  replay->add_option("--mode", mode)->check(CLI::IsMember({"live", "offline"}))->capture_default_str();
  replay->add_option("--fps", replay_fps, "Override the script frame rate (live)");
  replay->add_option("--out", replay_out, "Write predictions and session log JSON here");
  AddClassifierOptions(replay, replay_opts);

  // ablate
  auto* ablate = app.add_subcommand("ablate", "Run stage ablations on one eval set");
  std::string ablate_script;
  std::string toggles = "full,no-selection,no-norm,no-vision,no-text";
  std::string ablate_json;
  ClassifierOptions ablate_opts;
  ablate->add_option("--script", ablate_script, "Session directory or session.json")->required();
  ablate->add_option("--toggles", toggles, "Comma list of full,no-selection,no-norm,no-vision,no-text")
      ->capture_default_str();
  ablate->add_option("--json", ablate_json, "Write the report JSON here");
  AddClassifierOptions(ablate, ablate_opts);

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Check analytic gradients against finite differences");
  int gc_d = 16;
  double gc_eps = 1e-5;
  gradcheck->add_option("--d-model", gc_d)->capture_default_str();
  gradcheck->add_option("--eps", gc_eps)->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(spdlog::level::from_str(log_level));

  try {
    if (*serve) {
      auto built = BuildClassifier(serve_opts);
      auto detector = MakeDetector(serve_opts.detector, nullptr);
      Pipeline pipeline(built.cfg, detector, built.classifier);
      wire::EdgeServerConfig cfg;
      cfg.listen = wire::Endpoint::Parse(listen);
      if (!gateway.empty()) cfg.gateway = wire::Endpoint::Parse(gateway);
      cfg.buffer_capacity = buffer;
      cfg.console_dir = console_dir;
      wire::EdgeServer server(cfg, MakeTurnHandler(pipeline));
      server.Start();
      std::signal(SIGINT, OnSignal);
      std::signal(SIGTERM, OnSignal);
      while (!g_interrupted) std::this_thread::sleep_for(std::chrono::milliseconds(200));
      server.Stop();
      const auto s = server.stats();
      spdlog::info("served {} sessions, {} frames, {} turns ({} handler errors)", s.sessions,
                   s.frames_received, s.turns_handled, s.handler_errors);
      return 0;
    }
    if (*simulate) {
      const auto script = LoadSession(sim_script);
      wire::SimulatorConfig cfg;
      cfg.target = wire::Endpoint::Parse(target);
      cfg.fps = fps;
      const ScriptSource source(script);
      try {
        const auto log = wire::RunRobotSimulator(source, cfg);
        WriteText(sim_log, log.ToJson());
      } catch (const wire::TransportFailure& e) {
        WriteText(sim_log, e.log().ToJson());
        throw;
      }
      return 0;
    }
    if (*gen) {
      const auto cfg = GenConfigFromJson(ReadText(gen_config));
      const auto script = GenerateSyntheticSession(cfg);
      SaveSession(script, gen_out, render_frames);
      spdlog::info("wrote {} turns, {} frames to {}", script.turns.size(), script.frame_count, gen_out);
      return 0;
    }
    if (*train) {
      ocfg.stop_at_train_accuracy = stop_at;
      PipelineConfig pcfg;
      pcfg.context.k = train_opts.k;
      pcfg.context.named = train_opts.named;
      pcfg.context.max_tokens = static_cast<std::size_t>(mcfg.max_tokens);
      pcfg.percept.crop_side = mcfg.crop_side;
      pcfg.percept.max_frames = mcfg.max_frames;
      pcfg.vocab_size = static_cast<std::size_t>(mcfg.vocab_size);
      std::vector<vl2e::Sample> data;
      for (const auto& path : train_scripts) {
        const auto script = LoadSession(path);
        auto part = BuildDataset(script, pcfg, MakeDetector(train_opts.detector, &script), mcfg);
        data.insert(data.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      }
      spdlog::info("training on {} samples", data.size());
      auto params = vl2e::InitParams<double>(mcfg, init_seed);
      const auto history = vl2e::Train<double>(data, params, mcfg, ocfg, [](std::size_t e, double loss, double acc) {
        spdlog::info("epoch {:4d}  loss {:.4f}  train acc {:.4f}", e + 1, loss, acc);
      });
      vl2e::SaveParams(params, train_out);
      spdlog::info("saved {} after {} epochs", train_out, history.epochs_run);
      return 0;
    }
    if (*eval) {
      const auto script = LoadSession(eval_script);
      auto built = BuildClassifier(eval_opts);
      Pipeline pipeline(built.cfg, MakeDetector(eval_opts.detector, &script), built.classifier);
      const auto report = Evaluate(script, pipeline, eval_opts.stub ? "stub" : "VL2E");
      std::cout << ReportTable({report});
      if (!eval_json.empty()) WriteText(eval_json, ReportToJson(report));
      return 0;
    }
    if (*replay) {
      const auto script = LoadSession(replay_script);
      auto built = BuildClassifier(replay_opts);
      Pipeline pipeline(built.cfg, MakeDetector(replay_opts.detector, &script), built.classifier);
      ReplayOptions ro;
      ro.fps = replay_fps;
      const auto result =
          ReplaySession(script, pipeline, mode == "live" ? ReplayMode::kLive : ReplayMode::kOffline, ro);
      nlohmann::json preds = nlohmann::json::array();
      for (std::size_t i = 0; i < result.predictions.size(); ++i) {
        const int p = result.predictions[i];
        preds.push_back({{"turn_index", script.turns[i].turn.index},
                         {"prediction", IsValidEmotionId(p) ? std::string(EmotionName(EmotionFromId(p))) : "missing"},
                         {"gold", script.turns[i].turn.gold_emotion
                                      ? std::string(EmotionName(*script.turns[i].turn.gold_emotion))
                                      : ""}});
      }
      const nlohmann::json out = {{"mode", mode},
                                  {"partial", result.partial},
                                  {"error", result.error},
                                  {"predictions", std::move(preds)},
                                  {"log", nlohmann::json::parse(result.log.ToJson())}};
      WriteText(replay_out, out.dump(2));
      return result.partial ? 3 : 0;
    }
    if (*ablate) {
      const auto script = LoadSession(ablate_script);
      auto built = BuildClassifier(ablate_opts);
      const auto runs = RunAblation(script, built.cfg, MakeDetector(ablate_opts.detector, &script),
                                    built.classifier, ParseAblations(toggles));
      std::vector<EvalReport> reports;
      for (const auto& r : runs) reports.push_back(r.report);
      std::cout << ReportTable(reports);
      if (!ablate_json.empty()) WriteText(ablate_json, ReportsToJson(reports));
      return 0;
    }
    if (*gradcheck) {
      const auto cfg = vl2e::GradCheckConfig(gc_d);
      const auto params = vl2e::InitParams<double>(cfg, 0);
      const auto batch = vl2e::RandomBatch(cfg, 3, cfg.max_frames, cfg.max_tokens, 0);
      const auto report = vl2e::GradCheck(batch, params, cfg, gc_eps);
      for (const auto& e : report.entries) {
        std::printf("%-40s %8zu  max rel err %.3e\n", e.name.c_str(), e.elements, e.max_rel_error);
      }
      std::printf("overall max rel err %.3e\n", report.max_rel_error);
      return report.max_rel_error < 1e-4 ? 0 : 1;
    }
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
