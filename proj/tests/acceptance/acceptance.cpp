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

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any of them fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

#include "affectlink/error.hpp"
#include "affectlink/harness/metrics.hpp"
#include "affectlink/harness/replay.hpp"
#include "affectlink/harness/session.hpp"
#include "affectlink/vl2e/trainer.hpp"
#include "affectlink/wire/protocol.hpp"
#include "affectlink/wire/ring_buffer.hpp"
#include "support/random_wire.hpp"

namespace {

using namespace affectlink;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point since) {
  return std::chrono::duration<double>(Clock::now() - since).count();
}

std::string Format(const char* fmt, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, fmt, args...);
  return buf;
}

std::string ReadText(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

harness::Pipeline StubPipeline(const harness::PipelineConfig& cfg = {}) {
  return harness::Pipeline(cfg, std::make_shared<percept::BlobDetector>(),
                           std::make_shared<harness::StubClassifier>());
}

std::optional<ErrorCode> DecodeCode(const std::vector<std::uint8_t>& bytes) {
  try {
    wire::Decode(bytes);
  } catch (const Error& e) {
    return e.code();
  }
  return std::nullopt;
}

Outcome ProtocolRoundTrip() {
  const auto start = Clock::now();
  testing::RandomWire gen(20260101);
  int mismatches = 0;
  int bad_errors = 0;
  for (int i = 0; i < 10000; ++i) {
    const wire::WireMessage msg = gen.Next();
    const auto bytes = wire::Encode(msg);
    const auto decoded = wire::Decode(bytes);
    if (!decoded || decoded->consumed != bytes.size() || !(decoded->message == msg) ||
        wire::Encode(decoded->message) != bytes) {
      ++mismatches;
      continue;
    }
    // Truncation: every strict prefix needs more data.
    const std::size_t cut = static_cast<std::size_t>(gen.Int(0, static_cast<int>(bytes.size()) - 1));
    try {
      if (wire::Decode(std::span(bytes.data(), cut)).has_value()) ++bad_errors;
    } catch (const Error&) {
      ++bad_errors;
    }
    // Corrupted magic and tag.
    auto magic = bytes;
    magic[static_cast<std::size_t>(gen.Int(0, 3))] ^= 0x20;
    if (DecodeCode(magic) != ErrorCode::kBadMagic) ++bad_errors;
    auto tag = bytes;
    tag[4] = static_cast<std::uint8_t>(gen.Int(6, 255));
    if (DecodeCode(tag) != ErrorCode::kUnknownVariant) ++bad_errors;
    // A payload one byte short of its variant's fields.
    if (bytes.size() > wire::kHeaderSize) {
      auto shrunk = bytes;
      shrunk.pop_back();
      const std::uint32_t len = static_cast<std::uint32_t>(shrunk.size() - wire::kHeaderSize);
      for (int k = 0; k < 4; ++k) shrunk[5 + k] = static_cast<std::uint8_t>(len >> (24 - 8 * k));
      const auto code = DecodeCode(shrunk);
      // A frame or string may still parse when only trailing bytes vanish;
      // then the decoded value must differ from the original.
      if (code) {
        if (*code != ErrorCode::kMalformedPayload) ++bad_errors;
      } else if (wire::Decode(shrunk)->message == msg) {
        ++bad_errors;
      }
    }
  }
  const double t = Seconds(start);
  Outcome o;
  o.pass = mismatches == 0 && bad_errors == 0 && t < 10.0;
  o.detail = Format("10000 messages, %d mismatches, %d wrong error codes, %.2f s", mismatches, bad_errors, t);
  return o;
}

Outcome RingBufferProperty() {
  const auto start = Clock::now();
  std::mt19937_64 rng(640);
  int failures = 0;
  int trials = 0;
  std::vector<std::size_t> counts = {1, 639, 640, 641, 5000};
  for (int i = 0; i < 45; ++i) counts.push_back(std::uniform_int_distribution<std::size_t>(1, 5000)(rng));
  for (const std::size_t n : counts) {
    ++trials;
    wire::FrameRingBuffer ring(640);
    std::deque<std::uint64_t> oracle;
    for (std::size_t s = 0; s < n; ++s) {
      wire::FrameMsg f;
      f.seq = s;
      f.timestamp_us = s * 40000;
      ring.Push(std::move(f));
      oracle.push_back(s);
      if (oracle.size() > 640) oracle.pop_front();
    }
    const std::vector<std::uint64_t> expected(oracle.begin(), oracle.end());
    if (ring.Seqs() != expected || expected.size() != std::min<std::size_t>(n, 640)) ++failures;
  }
  const double t = Seconds(start);
  Outcome o;
  o.pass = failures == 0 && t < 10.0;
  o.detail = Format("%d push counts in [1, 5000], T=640, %d failures, %.2f s", trials, failures, t);
  return o;
}

Outcome Throughput() {
  harness::SyntheticGenConfig g;
  g.seed = 60;
  g.turns_per_dialogue = 15;
  g.frames_per_turn = 100;  // 15 x 100 frames = 60 s at 25 FPS
  g.distractors = 2;
  g.text_noise = 0.5;
  const auto script = harness::GenerateSyntheticSession(g);
  const vl2e::ModelConfig mc;
  auto classifier = std::make_shared<harness::Vl2eClassifier>(vl2e::InitParams<double>(mc, 0), mc);
  harness::Pipeline pipeline({}, std::make_shared<percept::BlobDetector>(), classifier);
  const auto r = harness::ReplaySession(script, pipeline, harness::ReplayMode::kLive);
  double max_latency = 0.0;
  for (const auto& c : r.log.commands) max_latency = std::max(max_latency, c.latency_ms);
  const double fps = r.log.duration_s > 0 ? static_cast<double>(r.log.frames_sent) / r.log.duration_s : 0.0;
  Outcome o;
  o.pass = !r.partial && r.log.decode_errors == 0 && r.server.decode_errors == 0 &&
           r.log.frames_dropped == 0 && r.server.frames_received == script.frame_count &&
           r.log.commands.size() == script.turns.size() && max_latency < 1000.0 && fps >= 24.5;
  o.detail = Format("%llu frames 640x480 in %.1f s (%.2f FPS), %llu dropped, %llu+%llu decode errors, "
                    "%zu/%zu commands, max latency %.1f ms",
                    static_cast<unsigned long long>(r.log.frames_sent), r.log.duration_s, fps,
                    static_cast<unsigned long long>(r.log.frames_dropped),
                    static_cast<unsigned long long>(r.log.decode_errors),
                    static_cast<unsigned long long>(r.server.decode_errors), r.log.commands.size(),
                    script.turns.size(), max_latency);
  if (r.partial) o.detail += " (partial: " + r.error + ")";
  return o;
}

Outcome DenoisingOracle() {
  const auto start = Clock::now();
  harness::SyntheticGenConfig g;
  g.seed = 1000;
  g.dialogues = 25;
  g.turns_per_dialogue = 4;
  g.frames_per_turn = 10;
  g.distractors = 2;
  const auto script = harness::GenerateSyntheticSession(g);
  const percept::BlobDetector detector;
  std::size_t frames = 0, centered_hits = 0, random_hits = 0;
  for (std::uint64_t seq = 0; seq < script.frame_count; ++seq) {
    const auto frame = script.Frame(seq);
    const auto boxes = detector.Detect(frame);
    const auto truth = script.annotations.Detect(frame);
    const auto active = std::find_if(truth.begin(), truth.end(),
                                     [](const percept::FaceBox& b) { return b.role == percept::FaceRole::kActive; });
    if (boxes.size() != 3 || active == truth.end()) continue;
    ++frames;
    if (percept::SelectActiveFace(boxes, frame.width).SameRect(*active)) ++centered_hits;
    percept::ExtractOptions random;
    random.selection = percept::SelectionPolicy::kRandom;
    random.random_seed = 77;
    random.neutral_normalization = false;
    percept::PerceptConfig pc;
    pc.max_frames = 1;
    const auto pick = percept::ExtractFaceSequence({frame}, detector, pc, random);
    if (pick && pick->source_boxes.front().SameRect(*active)) ++random_hits;
  }
  const double centered = frames ? static_cast<double>(centered_hits) / frames : 0.0;
  const double random = frames ? static_cast<double>(random_hits) / frames : 1.0;
  const double t = Seconds(start);
  Outcome o;
  o.pass = frames == 1000 && centered_hits == frames && random <= 0.40 && t < 30.0;
  o.detail = Format("%zu frames with 2 distractors: centered %.1f%%, random %.1f%%, %.1f s", frames,
                    100 * centered, 100 * random, t);
  return o;
}

Outcome GradientCheck() {
  const auto start = Clock::now();
  const auto cfg = vl2e::GradCheckConfig(16);
  auto params = vl2e::InitParams<double>(cfg, 0);
  // Move norm gains and biases off their defaults so every path carries gradient.
  std::mt19937_64 rng(16);
  std::uniform_real_distribution<double> u(-0.2, 0.2);
  for (auto& [name, t] : params) {
    for (auto& v : t.data) v += u(rng);
  }
  const auto batch = vl2e::RandomBatch(cfg, 2, 4, 8, 3);
  const auto report = vl2e::GradCheck(batch, params, cfg, 1e-5);
  std::string worst;
  double worst_err = -1;
  for (const auto& e : report.entries) {
    if (e.max_rel_error > worst_err) {
      worst_err = e.max_rel_error;
      worst = e.name;
    }
  }
  const double t = Seconds(start);
  Outcome o;
  o.pass = report.max_rel_error < 1e-4 && report.entries.size() == vl2e::ParameterShapes(cfg).size() && t < 300.0;
  o.detail = Format("d_model=16 h=2, %zu tensors, max relative error %.2e (%s), %.1f s", report.entries.size(),
                    report.max_rel_error, worst.c_str(), t);
  return o;
}

Outcome Overfit() {
  const auto start = Clock::now();
  harness::SyntheticGenConfig g;
  g.seed = 0;
  g.dialogues = 50;
  g.turns_per_dialogue = 4;
  g.frames_per_turn = 12;
  g.distractors = 0;
  g.text_noise = 0.0;
  const auto script = harness::GenerateSyntheticSession(g);
  const vl2e::ModelConfig mc;
  const auto data = harness::BuildDataset(script, {}, std::make_shared<percept::BlobDetector>(), mc);
  auto params = vl2e::InitParams<double>(mc, 0);
  vl2e::OptimizerConfig oc;
  oc.epochs = 300;
  oc.seed = 0;
  oc.stop_at_train_accuracy = 0.95;
  const auto history = vl2e::Train<double>(data, params, mc, oc);
  const double acc = vl2e::Accuracy<double>(data, params, mc);
  const double t = Seconds(start);
  Outcome o;
  o.pass = data.size() == 200 && acc >= 0.95 && history.epochs_run <= 300 && t < 300.0;
  o.detail = Format("%zu samples, train accuracy %.1f%% after %zu epochs, %.1f s", data.size(), 100 * acc,
                    history.epochs_run, t);
  return o;
}

Outcome DenoisingAblation() {
  const auto start = Clock::now();
  harness::SyntheticGenConfig g;
  g.turns_per_dialogue = 4;
  g.frames_per_turn = 12;
  g.distractors = 2;
  g.text_noise = 0.5;
  g.seed = 100;
  g.dialogues = 100;
  const auto train = harness::GenerateSyntheticSession(g);
  g.seed = 200;
  g.dialogues = 125;
  const auto eval = harness::GenerateSyntheticSession(g);

  const vl2e::ModelConfig mc;
  const auto detector = std::make_shared<percept::BlobDetector>();
  const auto data = harness::BuildDataset(train, {}, detector, mc);
  auto params = vl2e::InitParams<double>(mc, 0);
  vl2e::OptimizerConfig oc;
  oc.epochs = 15;
  oc.stop_at_train_accuracy = 1.0;
  vl2e::Train<double>(data, params, mc, oc);
  const auto classifier = std::make_shared<harness::Vl2eClassifier>(std::move(params), mc);
  const auto runs = harness::RunAblation(eval, {}, detector, classifier, harness::StandardAblations());
  const double full = runs[0].report.accuracy;
  const double no_sel = runs[1].report.accuracy;
  const double no_norm = runs[2].report.accuracy;
  const double t = Seconds(start);
  Outcome o;
  o.pass = eval.turns.size() == 500 && full >= no_sel + 0.15 && full >= no_norm;
  o.detail = Format("500 turns: full %.1f%%, w/o selection %.1f%%, w/o norm %.1f%%, w/o vision %.1f%%, "
                    "w/o text %.1f%%, %.1f s",
                    100 * full, 100 * no_sel, 100 * no_norm, 100 * runs[3].report.accuracy,
                    100 * runs[4].report.accuracy, t);
  return o;
}

Outcome MetricsOracle() {
  const int joy = 4, sadness = 3;
  const double wf1 = harness::WeightedF1({joy, joy, sadness}, {joy, sadness, sadness});
  const double ra = harness::ResponseAccuracy({{{1, 2}, {1, 2}}, {{1, 3}, {1, 2}}});
  bool fixtures = std::fabs(wf1 - 0.6667) <= 1e-4 && std::fabs(ra - 0.75) <= 1e-4;

  std::mt19937 rng(500);
  std::uniform_int_distribution<int> label(0, 6);
  std::vector<int> p(500), gold(500);
  for (int i = 0; i < 500; ++i) {
    gold[i] = label(rng);
    p[i] = rng() % 2 == 0 ? gold[i] : label(rng);
  }
  // Independent confusion matrix and F1 from its counts.
  std::uint64_t cm[7][7] = {};
  for (int i = 0; i < 500; ++i) ++cm[gold[i]][p[i]];
  const auto got = harness::Confusion(p, gold);
  bool same_cm = true;
  for (int a = 0; a < 7; ++a) {
    for (int b = 0; b < 7; ++b) same_cm = same_cm && got[a][b] == cm[a][b];
  }
  double oracle = 0;
  for (int c = 0; c < 7; ++c) {
    std::uint64_t predicted = 0, support = 0;
    for (int k = 0; k < 7; ++k) {
      predicted += cm[k][c];
      support += cm[c][k];
    }
    const double f1 = predicted + support > 0 ? 2.0 * cm[c][c] / static_cast<double>(predicted + support) : 0.0;
    oracle += f1 * static_cast<double>(support) / 500.0;
  }
  const double ours = harness::WeightedF1(p, gold);
  const bool same_f1 = std::fabs(ours - oracle) <= 1e-12;
  Outcome o;
  o.pass = fixtures && same_cm && same_f1;
  o.detail = Format("weighted F1 %.4f (want 0.6667), response accuracy %.4f (want 0.75), 500-sample confusion %s, "
                    "F1 %.12f vs oracle %.12f",
                    wf1, ra, same_cm ? "identical" : "differs", ours, oracle);
  return o;
}

std::vector<std::uint8_t> ParseHex(const std::string& text) {
  std::vector<std::uint8_t> out;
  std::istringstream lines(text);
  for (std::string line; std::getline(lines, line);) {
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::string digits;
    for (char c : line) {
      if (std::isxdigit(static_cast<unsigned char>(c))) digits.push_back(c);
    }
    for (std::size_t i = 0; i + 1 < digits.size(); i += 2) {
      out.push_back(static_cast<std::uint8_t>(std::stoi(digits.substr(i, 2), nullptr, 16)));
    }
  }
  return out;
}

Outcome GoldenEndToEnd() {
  const std::filesystem::path data(AFFECTLINK_TEST_DATA);
  const auto script = harness::GenerateSyntheticSession(harness::GenConfigFromJson(ReadText(data / "golden_gen.json")));
  const auto golden = ParseHex(ReadText(data / "golden_expr.hex"));
  auto live_pipeline = StubPipeline();
  const auto live = harness::ReplaySession(script, live_pipeline, harness::ReplayMode::kLive);
  auto offline_pipeline = StubPipeline();
  const auto offline = harness::ReplaySession(script, offline_pipeline, harness::ReplayMode::kOffline);
  const auto bytes = live.log.ExprBytes();
  Outcome o;
  o.pass = !live.partial && !golden.empty() && bytes == golden && live.predictions == offline.predictions &&
           live.predictions == harness::GoldLabels(script);
  std::string preds;
  for (int p : live.predictions) preds += (preds.empty() ? "" : ",") + std::string(EmotionName(EmotionFromId(p)));
  o.detail = Format("live EXPR_CMD stream %zu bytes %s golden (%zu bytes), predictions [%s], offline %s",
                    bytes.size(), bytes == golden ? "equals" : "differs from", golden.size(), preds.c_str(),
                    live.predictions == offline.predictions ? "identical" : "different");
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {"protocol round-trip", ProtocolRoundTrip},
      {"ring buffer property", RingBufferProperty},
      {"throughput and latency", Throughput},
      {"denoising oracle", DenoisingOracle},
      {"gradient check", GradientCheck},
      {"overfit", Overfit},
      {"denoising ablation", DenoisingAblation},
      {"metrics oracle", MetricsOracle},
      {"golden end-to-end", GoldenEndToEnd},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw: ") + e.what();
    }
    std::printf("%s  %-24s %s\n", o.pass ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
