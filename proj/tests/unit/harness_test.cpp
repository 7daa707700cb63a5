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

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "affectlink/error.hpp"
#include "affectlink/harness/metrics.hpp"
#include "affectlink/harness/replay.hpp"
#include "affectlink/harness/session.hpp"

namespace affectlink::harness {
namespace {

constexpr int kJoy = 4;
constexpr int kSadness = 3;

std::string ReadText(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SessionScript GoldenScript() {
  return GenerateSyntheticSession(GenConfigFromJson(ReadText(std::filesystem::path(AFFECTLINK_TEST_DATA) / "golden_gen.json")));
}

SyntheticGenConfig DistractorConfig(std::uint64_t seed, int dialogues) {
  SyntheticGenConfig g;
  g.seed = seed;
  g.dialogues = dialogues;
  g.turns_per_dialogue = 4;
  g.frames_per_turn = 12;
  g.distractors = 2;
  g.text_noise = 0.5;
  return g;
}

Pipeline StubPipeline(const PipelineConfig& cfg = {}) {
  return Pipeline(cfg, std::make_shared<percept::BlobDetector>(), std::make_shared<StubClassifier>());
}

// ---- generator

TEST(Generator, SameSeedSameSession) {
  const auto cfg = DistractorConfig(3, 2);
  const auto a = GenerateSyntheticSession(cfg);
  const auto b = GenerateSyntheticSession(cfg);
  EXPECT_EQ(SessionToJson(a), SessionToJson(b));
  for (std::uint64_t s = 0; s < a.frame_count; s += 7) EXPECT_EQ(a.Frame(s), b.Frame(s));
  auto other = cfg;
  other.seed = 4;
  EXPECT_NE(SessionToJson(GenerateSyntheticSession(other)), SessionToJson(a));
}

TEST(Generator, NoDistractorsMeansOneBox) {
  auto cfg = DistractorConfig(1, 2);
  cfg.distractors = 0;
  const auto s = GenerateSyntheticSession(cfg);
  for (std::uint64_t seq = 0; seq < s.frame_count; ++seq) {
    wire::FrameMsg f;
    f.seq = seq;
    f.width = cfg.width;
    f.height = cfg.height;
    EXPECT_EQ(s.annotations.Detect(f).size(), 1u);
  }
}

TEST(Generator, TwoDistractorsAnnotationScan) {
  const auto s = GenerateSyntheticSession(DistractorConfig(5, 3));
  const percept::BlobDetector blobs;
  for (std::uint64_t seq = 0; seq < s.frame_count; ++seq) {
    wire::FrameMsg key;
    key.width = 640;
    key.height = 480;
    key.seq = seq;
    const auto boxes = s.annotations.Detect(key);
    ASSERT_EQ(boxes.size(), 3u) << seq;
    int active = 0;
    for (const auto& b : boxes) {
      if (b.role != percept::FaceRole::kActive) continue;
      ++active;
      EXPECT_LE(std::fabs(b.center_x() - s.width / 2.0), 10.0) << seq;
    }
    EXPECT_EQ(active, 1) << seq;
    // The rendered pixels agree with the annotations.
    if (seq % 5 == 0) {
      const auto found = blobs.Detect(s.Frame(seq));
      ASSERT_EQ(found.size(), 3u);
      for (const auto& b : boxes) {
        EXPECT_TRUE(std::any_of(found.begin(), found.end(), [&](const percept::FaceBox& f) { return f.SameRect(b); }));
      }
    }
  }
}

TEST(Generator, DistractorsShowADifferentEmotion) {
  const auto s = GenerateSyntheticSession(DistractorConfig(6, 2));
  for (const auto& t : s.turns) {
    for (std::uint64_t seq = t.first_seq; seq <= t.last_seq; ++seq) {
      const auto& scene = s.scenes[seq];
      ASSERT_EQ(scene.size(), 3u);
      for (std::size_t i = 1; i < scene.size(); ++i) EXPECT_NE(scene[i].shown, *t.turn.gold_emotion);
    }
    EXPECT_EQ(s.scenes[t.first_seq].front().shown, EmotionLabel::kNeutral);
    EXPECT_EQ(s.scenes[t.last_seq].front().shown, *t.turn.gold_emotion);
  }
}

TEST(Generator, TurnsTileTheStream) {
  const auto s = GenerateSyntheticSession(DistractorConfig(2, 2));
  ASSERT_EQ(s.turns.size(), 8u);
  EXPECT_EQ(s.frame_count, 8u * 12u);
  for (std::size_t i = 0; i < s.turns.size(); ++i) {
    const auto& t = s.turns[i];
    EXPECT_EQ(t.turn.index, i);
    EXPECT_EQ(t.first_seq, i * 12);
    EXPECT_EQ(t.last_seq, i * 12 + 11);
    EXPECT_EQ(t.turn.start_ts_us, s.FrameTimestamp(t.first_seq));
    EXPECT_EQ(t.turn.end_ts_us, s.FrameTimestamp(t.last_seq));
    EXPECT_EQ(s.FramesInWindow(t.turn.start_ts_us, t.turn.end_ts_us).size(), 12u);
    EXPECT_TRUE(t.turn.gold_emotion.has_value());
  }
  EXPECT_EQ(s.FrameTimestamp(25), 1000000u);
}

TEST(Generator, KeywordRateFollowsTextNoise) {
  auto cfg = DistractorConfig(8, 50);
  cfg.text_noise = 0.0;
  for (const auto& t : GenerateSyntheticSession(cfg).turns) {
    EXPECT_EQ(StubClassifier::KeywordEmotion(t.turn.text), t.turn.gold_emotion) << t.turn.text;
  }
  cfg.text_noise = 1.0;
  for (const auto& t : GenerateSyntheticSession(cfg).turns) {
    EXPECT_FALSE(StubClassifier::KeywordEmotion(t.turn.text).has_value()) << t.turn.text;
  }
}

TEST(Generator, ConfigJsonRoundTripAndValidation) {
  auto cfg = DistractorConfig(9, 2);
  cfg.script = {{std::string("Ann"), std::string("so happy"), EmotionLabel::kJoy}};
  const auto back = GenConfigFromJson(GenConfigToJson(cfg));
  EXPECT_EQ(GenConfigToJson(back), GenConfigToJson(cfg));
  auto bad = cfg;
  bad.face_side = 1000;
  EXPECT_THROW(bad.Validate(), Error);
  bad = cfg;
  bad.fps = 0;
  EXPECT_THROW(bad.Validate(), Error);
  EXPECT_THROW(GenConfigFromJson("{\"fps\": \"fast\"}"), Error);
}

TEST(Generator, SaveAndLoadWithRenderedFrames) {
  auto cfg = DistractorConfig(10, 1);
  cfg.width = 320;
  cfg.height = 240;
  cfg.face_side = 48;
  cfg.distractors = 1;
  cfg.distractor_offset_max = 130;
  const auto s = GenerateSyntheticSession(cfg);
  const auto dir = std::filesystem::temp_directory_path() / "affectlink_session_test";
  std::filesystem::remove_all(dir);
  SaveSession(s, dir, true);
  const auto loaded = LoadSession(dir);
  EXPECT_FALSE(loaded.generator.has_value());
  ASSERT_EQ(loaded.frame_count, s.frame_count);
  ASSERT_EQ(loaded.turns.size(), s.turns.size());
  for (std::size_t i = 0; i < s.turns.size(); ++i) EXPECT_EQ(loaded.turns[i].turn, s.turns[i].turn);
  for (std::uint64_t seq = 0; seq < s.frame_count; seq += 5) EXPECT_EQ(loaded.Frame(seq), s.Frame(seq));
  EXPECT_EQ(loaded.annotations.boxes(), s.annotations.boxes());

  SaveSession(s, dir, false);
  const auto regen = LoadSession(dir / "session.json");
  ASSERT_TRUE(regen.generator.has_value());
  EXPECT_EQ(regen.Frame(3), s.Frame(3));
  std::filesystem::remove_all(dir);
}

// ---- metrics

TEST(Metrics, WeightedF1Fixture) {
  EXPECT_NEAR(WeightedF1({kJoy, kJoy, kSadness}, {kJoy, kSadness, kSadness}), 2.0 / 3.0, 1e-4);
  EXPECT_NEAR(WeightedF1({kJoy, kJoy, kSadness}, {kJoy, kSadness, kSadness}), 0.6667, 1e-4);
  EXPECT_DOUBLE_EQ(WeightedF1({1, 2, 3}, {1, 2, 3}), 1.0);
  EXPECT_THROW(WeightedF1({1}, {1, 2}), Error);
  EXPECT_THROW(WeightedF1({9}, {1}), Error);
}

TEST(Metrics, ResponseAccuracyFixture) {
  EXPECT_NEAR(ResponseAccuracy({{{1, 2}, {1, 2}}, {{1, 3}, {1, 2}}}), 0.75, 1e-4);
  EXPECT_DOUBLE_EQ(ResponseAccuracy({{{0, 0, 0}, {0, 0, 0}}}), 1.0);
  EXPECT_NEAR(ResponseAccuracy({{{0, 1, 2}, {0, 1, 1}}}), 2.0 / 3.0, 1e-12);
  EXPECT_THROW(ResponseAccuracy({}), Error);
  EXPECT_THROW(ResponseAccuracy({{{}, {}}}), Error);
}

// Second implementation straight from the definition, without a matrix.
double OracleWeightedF1(const std::vector<int>& p, const std::vector<int>& g) {
  double total = 0;
  for (int c = 0; c < kNumEmotions; ++c) {
    double tp = 0, fp = 0, fn = 0, support = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      if (p[i] == c && g[i] == c) ++tp;
      if (p[i] == c && g[i] != c) ++fp;
      if (p[i] != c && g[i] == c) ++fn;
      if (g[i] == c) ++support;
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0;
    const double recall = tp + fn > 0 ? tp / (tp + fn) : 0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0;
    total += f1 * support;
  }
  return total / static_cast<double>(p.size());
}

TEST(Metrics, MatchesIndependentOracleOnRandomSamples) {
  std::mt19937 rng(500);
  std::uniform_int_distribution<int> label(0, 6);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<int> p(500), g(500);
    for (int i = 0; i < 500; ++i) {
      g[i] = label(rng);
      p[i] = rng() % 3 == 0 ? g[i] : label(rng);
    }
    const auto cm = Confusion(p, g);
    for (int a = 0; a < 7; ++a) {
      for (int b = 0; b < 7; ++b) {
        std::uint64_t n = 0;
        for (int i = 0; i < 500; ++i) n += (g[i] == a && p[i] == b) ? 1 : 0;
        EXPECT_EQ(cm[a][b], n);
      }
    }
    EXPECT_NEAR(WeightedF1(p, g), OracleWeightedF1(p, g), 1e-12);
  }
}

TEST(Metrics, ReportFieldsAndTable) {
  const auto r = MakeReport("demo", {kJoy, kJoy, kSadness, 0}, {kJoy, kSadness, kSadness, 0}, {0, 0, 1, 1});
  EXPECT_EQ(r.samples, 4u);
  EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
  EXPECT_DOUBLE_EQ(r.response_accuracy, 0.75);
  EXPECT_EQ(r.support[kSadness], 2u);
  ASSERT_EQ(r.per_dialogue.size(), 2u);
  EXPECT_NE(ReportTable({r}).find("demo"), std::string::npos);
  EXPECT_NE(ReportToJson(r).find("\"weighted_f1\""), std::string::npos);
}

// ---- pipeline and replay

TEST(Pipeline, GoldenOfflinePredictions) {
  const auto script = GoldenScript();
  ASSERT_EQ(script.turns.size(), 3u);
  auto pipeline = StubPipeline();
  const auto result = ReplaySession(script, pipeline, ReplayMode::kOffline);
  EXPECT_EQ(result.predictions, (std::vector<int>{0, 6, 4}));
  EXPECT_EQ(result.predictions, GoldLabels(script));
  EXPECT_TRUE(result.turns[1].visual_evidence);
}

TEST(Pipeline, StubFollowsTheActiveFace) {
  SyntheticGenConfig g;
  g.seed = 1;
  g.distractors = 2;
  g.script = {{std::nullopt, std::string("the meeting moved to noon"), EmotionLabel::kJoy}};
  const auto script = GenerateSyntheticSession(g);
  auto pipeline = StubPipeline();
  const auto& t = script.turns[0].turn;
  const auto r = pipeline.HandleTurn(t, script.FramesInWindow(t.start_ts_us, t.end_ts_us));
  EXPECT_EQ(r.label, EmotionLabel::kJoy);
  EXPECT_EQ(r.command.issue_ts_us, t.end_ts_us);
  EXPECT_DOUBLE_EQ(r.probabilities[kJoy], 0.88);
}

TEST(Pipeline, EmptySnapshotFallsBackToText) {
  auto pipeline = StubPipeline();
  context::Turn t;
  t.text = "I am so happy";
  const auto r = pipeline.HandleTurn(t, {});
  EXPECT_FALSE(r.visual_evidence);
  EXPECT_EQ(r.label, EmotionLabel::kJoy);
  context::Turn u;
  u.index = 1;
  u.text = "nothing to see";
  EXPECT_EQ(pipeline.HandleTurn(u, {}).label, EmotionLabel::kNeutral);
}

TEST(Pipeline, WireTurnConversion) {
  wire::TurnMsg m{2, 10, 20, std::string(""), "hey"};
  const auto t = TurnFromWire(m);
  EXPECT_FALSE(t.speaker.has_value());
  EXPECT_EQ(t.index, 2u);
  m.speaker = "Ann";
  EXPECT_EQ(TurnToWire(TurnFromWire(m)), m);
}

TEST(Ablation, TogglesChangeOnlyTheirStage) {
  const auto script = GenerateSyntheticSession(DistractorConfig(11, 3));
  const auto runs = RunAblation(script, PipelineConfig{}, std::make_shared<percept::BlobDetector>(),
                                std::make_shared<StubClassifier>(), StandardAblations());
  ASSERT_EQ(runs.size(), 5u);
  const auto& full = runs[0].traces;
  auto differs = [&](std::size_t k, std::uint64_t StageTrace::*field) {
    for (std::size_t i = 0; i < full.size(); ++i) {
      if (runs[k].traces[i].*field != full[i].*field) return true;
    }
    return false;
  };
  const std::vector<std::uint64_t StageTrace::*> stages = {
      &StageTrace::snapshot, &StageTrace::detections, &StageTrace::selection, &StageTrace::delta,
      &StageTrace::vision_input, &StageTrace::context, &StageTrace::tokens};
  // Stages each toggle may change; every other stage must stay identical.
  const std::vector<std::vector<std::uint64_t StageTrace::*>> allowed = {
      {},
      {&StageTrace::selection, &StageTrace::delta, &StageTrace::vision_input},
      {&StageTrace::delta, &StageTrace::vision_input},
      {&StageTrace::vision_input},
      {&StageTrace::tokens}};
  for (std::size_t k = 1; k < runs.size(); ++k) {
    for (auto field : stages) {
      const bool may = std::find(allowed[k].begin(), allowed[k].end(), field) != allowed[k].end();
      if (may) {
        EXPECT_TRUE(differs(k, field)) << runs[k].report.name;
      } else {
        EXPECT_FALSE(differs(k, field)) << runs[k].report.name;
      }
    }
  }
  EXPECT_EQ(runs[0].report.name, "full");
  EXPECT_EQ(runs[1].report.name, "w/o active selection");
}

TEST(Ablation, SelectionIsIrrelevantWithoutDistractors) {
  auto cfg = DistractorConfig(12, 5);
  cfg.distractors = 0;
  const auto script = GenerateSyntheticSession(cfg);
  const auto runs = RunAblation(script, PipelineConfig{}, std::make_shared<percept::BlobDetector>(),
                                std::make_shared<StubClassifier>(), ParseAblations("full,no-selection"));
  EXPECT_EQ(runs[0].predictions, runs[1].predictions);
  for (std::size_t i = 0; i < runs[0].traces.size(); ++i) EXPECT_EQ(runs[0].traces[i], runs[1].traces[i]);
}

TEST(Ablation, ParseToggles) {
  const auto t = ParseAblations("no-vision,no-text");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_FALSE(t[0].vision);
  EXPECT_FALSE(t[1].text);
  EXPECT_EQ(t[0].Name(), "w/o vision");
  EXPECT_THROW(ParseAblations("no-idea"), Error);
  EXPECT_THROW(ParseAblations(""), Error);
}

TEST(Dataset, SamplesFollowThePipelineStages) {
  const auto script = GenerateSyntheticSession(DistractorConfig(13, 2));
  vl2e::ModelConfig mc;
  const auto data = BuildDataset(script, PipelineConfig{}, std::make_shared<percept::BlobDetector>(), mc);
  ASSERT_EQ(data.size(), script.turns.size());
  const auto golds = GoldLabels(script);
  for (std::size_t i = 0; i < data.size(); ++i) {
    EXPECT_EQ(data[i].label, golds[i]);
    ASSERT_TRUE(data[i].vision.has_value());
    EXPECT_EQ(data[i].vision->frames, 12);
    EXPECT_EQ(data[i].tokens.back(), context::Tokenizer::kMaskId);
  }
}

TEST(Replay, EmptyScriptGivesEmptyPredictions) {
  SessionScript empty;
  empty.session_id = "empty";
  auto pipeline = StubPipeline();
  EXPECT_TRUE(ReplaySession(empty, pipeline, ReplayMode::kOffline).predictions.empty());
  const auto live = ReplaySession(empty, pipeline, ReplayMode::kLive);
  EXPECT_TRUE(live.predictions.empty());
  EXPECT_FALSE(live.partial) << live.error;
  EXPECT_TRUE(live.log.commands.empty());
  EXPECT_EQ(live.log.frames_sent, 0u);
}

}  // namespace
}  // namespace affectlink::harness
