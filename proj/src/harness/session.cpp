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

#include "affectlink/harness/session.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <sstream>

#include "affectlink/error.hpp"
#include "affectlink/vl2e/tensor.hpp"

namespace affectlink::harness {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

constexpr std::array<std::string_view, 8> kSpeakers = {"Tim", "Ana", "Raj", "Mei",
                                                       "Leo", "Zoe", "Sam", "Eva"};
constexpr std::array<std::string_view, 10> kTopics = {
    "the meeting", "my paper",   "the weather", "dinner",    "the experiment",
    "the project", "the trip",   "the lecture", "my sister", "the game"};
constexpr std::array<std::string_view, 4> kWhen = {"yesterday", "this morning", "last week",
                                                   "today"};

template <std::size_t N>
std::string_view Pick(vl2e::Rng& rng, const std::array<std::string_view, N>& items) {
  return items[rng.Below(N)];
}

std::string KeywordText(vl2e::Rng& rng, std::string_view kw) {
  const std::string topic(Pick(rng, kTopics));
  const std::string k(kw);
  switch (rng.Below(4)) {
    case 0: return "I feel " + k + " about " + topic;
    case 1: return topic + " left me " + k;
    case 2: return "honestly " + topic + " was " + k;
    default: return "I am " + k + " after " + topic;
  }
}

std::string FillerText(vl2e::Rng& rng) {
  const std::string topic(Pick(rng, kTopics));
  switch (rng.Below(4)) {
    case 0: return "we talked about " + topic + " " + std::string(Pick(rng, kWhen));
    case 1: return "I was thinking about " + topic;
    case 2: return topic + " is on my mind";
    default: return "tell me more about " + topic;
  }
}

EmotionLabel OtherEmotion(vl2e::Rng& rng, EmotionLabel not_this) {
  int id = static_cast<int>(rng.Below(kNumEmotions - 1));
  if (id >= EmotionId(not_this)) ++id;
  return EmotionFromId(id);
}

int SlotSpacing(const SyntheticGenConfig& cfg) { return cfg.face_side + 16; }

int SlotsPerSide(const SyntheticGenConfig& cfg) { return (cfg.distractors + 1) / 2; }

[[noreturn]] void ScriptFail(const std::string& what) { throw Error(ErrorCode::kScriptError, what); }

json TurnToJson(const ScriptTurn& st) {
  json j = {{"index", st.turn.index},
            {"dialogue", st.dialogue},
            {"text", st.turn.text},
            {"start_ts_us", st.turn.start_ts_us},
            {"end_ts_us", st.turn.end_ts_us},
            {"first_seq", st.first_seq},
            {"last_seq", st.last_seq}};
  if (st.turn.speaker) j["speaker"] = *st.turn.speaker;
  if (st.turn.gold_emotion) j["gold_emotion"] = std::string(EmotionName(*st.turn.gold_emotion));
  return j;
}

ScriptTurn TurnFromJson(const json& j) {
  ScriptTurn st;
  st.turn.index = j.at("index").get<std::uint32_t>();
  st.dialogue = j.value("dialogue", 0);
  st.turn.text = j.at("text").get<std::string>();
  st.turn.start_ts_us = j.at("start_ts_us").get<std::uint64_t>();
  st.turn.end_ts_us = j.at("end_ts_us").get<std::uint64_t>();
  st.first_seq = j.value("first_seq", std::uint64_t{0});
  st.last_seq = j.value("last_seq", std::uint64_t{0});
  if (j.contains("speaker")) st.turn.speaker = j.at("speaker").get<std::string>();
  if (j.contains("gold_emotion")) {
    const auto name = j.at("gold_emotion").get<std::string>();
    const auto label = ParseEmotion(name);
    if (!label) ScriptFail("unknown gold_emotion '" + name + "'");
    st.turn.gold_emotion = *label;
  }
  return st;
}

std::string ReadFile(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) ScriptFail("cannot open " + p.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

void WriteFile(const fs::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) ScriptFail("cannot write " + p.string());
  f << text;
}

std::string FrameFileName(std::uint64_t seq) {
  char name[32];
  std::snprintf(name, sizeof name, "%08llu.ppm", static_cast<unsigned long long>(seq));
  return name;
}

}  // namespace

void SyntheticGenConfig::Validate() const {
  if (fps < 1 || fps > 1000) ScriptFail("fps must lie in [1, 1000]");
  if (face_side < 16) ScriptFail("face side must be >= 16");
  if (width > 65535 || height > 65535) ScriptFail("frame too large");
  if (width < face_side + 2 * center_jitter || height < face_side) {
    ScriptFail("frame too small for the face");
  }
  if (frames_per_turn < 2 || frames_per_turn > 640) ScriptFail("frames per turn must lie in [2, 640]");
  if (dialogues < 0 || turns_per_dialogue < 0) ScriptFail("negative dialogue plan");
  if (center_jitter < 0) ScriptFail("negative jitter");
  if (!(text_noise >= 0.0 && text_noise <= 1.0)) ScriptFail("text noise must lie in [0, 1]");
  if (!(onset_fraction >= 0.0 && onset_fraction < 1.0)) ScriptFail("onset fraction must lie in [0, 1)");
  if (distractors < 0) ScriptFail("negative distractor count");
  if (distractors > 0) {
    if (distractor_offset_min < 100) ScriptFail("distractor centers must be >= 100 px from center");
    if (distractor_offset_min < center_jitter + face_side + 2) ScriptFail("distractors overlap the active face");
    const int reach = distractor_offset_min + (SlotsPerSide(*this) - 1) * SlotSpacing(*this);
    if (reach > distractor_offset_max) ScriptFail("distractor offset range too narrow");
    if (width / 2 + distractor_offset_max + face_side / 2 + 1 > width) {
      ScriptFail("distractor offset range leaves the frame");
    }
  }
}

std::uint64_t SessionScript::FrameTimestamp(std::uint64_t seq) const {
  return seq * 1'000'000ULL / static_cast<std::uint64_t>(fps);
}

wire::FrameMsg SessionScript::Frame(std::uint64_t seq) const {
  if (seq >= frame_count) ScriptFail("frame " + std::to_string(seq) + " out of range");
  if (generator) return RenderFrame(seq, FrameTimestamp(seq), width, height, scenes.at(seq));
  auto f = ReadPpm(frame_dir / FrameFileName(seq), seq, FrameTimestamp(seq));
  if (f.width != width || f.height != height) ScriptFail("frame " + std::to_string(seq) + " has the wrong size");
  return f;
}

std::vector<wire::FrameMsg> SessionScript::FramesInWindow(std::uint64_t start_us,
                                                          std::uint64_t end_us) const {
  std::vector<wire::FrameMsg> out;
  if (start_us > end_us) return out;
  // ts(seq) is non-decreasing, so scan from the first candidate.
  std::uint64_t seq = start_us * static_cast<std::uint64_t>(fps) / 1'000'000ULL;
  while (seq > 0 && FrameTimestamp(seq - 1) >= start_us) --seq;
  for (; seq < frame_count; ++seq) {
    const auto ts = FrameTimestamp(seq);
    if (ts > end_us) break;
    if (ts >= start_us) out.push_back(Frame(seq));
  }
  return out;
}

wire::SessionMetaMsg SessionScript::Meta() const {
  wire::SessionMetaMsg m;
  m.session_id = session_id;
  m.fps = static_cast<std::uint16_t>(fps);
  m.width = static_cast<std::uint16_t>(width);
  m.height = static_cast<std::uint16_t>(height);
  return m;
}

void SessionScript::Validate() const {
  if (fps < 1 || fps > 65535) ScriptFail("bad fps");
  if (width < 1 || height < 1 || width > 65535 || height > 65535) ScriptFail("bad frame size");
  if (generator && scenes.size() != frame_count) ScriptFail("scene count differs from frame count");
  for (std::size_t i = 0; i < turns.size(); ++i) {
    const auto& t = turns[i];
    if (t.turn.index != turns.front().turn.index + i) ScriptFail("turn indices are not contiguous");
    if (t.turn.text.empty()) ScriptFail("turn " + std::to_string(t.turn.index) + " has no text");
    if (t.turn.start_ts_us > t.turn.end_ts_us) ScriptFail("turn window is inverted");
    if (t.last_seq >= frame_count || t.first_seq > t.last_seq) {
      ScriptFail("turn " + std::to_string(t.turn.index) + " window is not covered by frames");
    }
    if (FrameTimestamp(t.first_seq) > t.turn.start_ts_us || FrameTimestamp(t.last_seq) < t.turn.end_ts_us) {
      ScriptFail("turn " + std::to_string(t.turn.index) + " window is not covered by frames");
    }
    if (i > 0 && t.first_seq <= turns[i - 1].last_seq) ScriptFail("turn frame ranges overlap");
  }
  for (const auto& [seq, boxes] : annotations.boxes()) {
    if (seq >= frame_count) ScriptFail("annotation for missing frame " + std::to_string(seq));
  }
}

SessionScript GenerateSyntheticSession(const SyntheticGenConfig& cfg) {
  cfg.Validate();
  vl2e::Rng rng(cfg.seed);
  SessionScript s;
  s.session_id = cfg.session_id;
  s.fps = cfg.fps;
  s.width = cfg.width;
  s.height = cfg.height;
  s.generator = cfg;

  struct Plan {
    int dialogue;
    std::string speaker;
    std::string text;
    EmotionLabel emotion;
  };
  std::vector<Plan> plan;
  if (!cfg.script.empty()) {
    const std::string speaker(Pick(rng, kSpeakers));
    for (const auto& st : cfg.script) {
      plan.push_back({0, st.speaker.value_or(speaker), st.text.value_or(""), st.emotion});
    }
  } else {
    for (int d = 0; d < cfg.dialogues; ++d) {
      const std::string speaker(Pick(rng, kSpeakers));
      for (int t = 0; t < cfg.turns_per_dialogue; ++t) {
        plan.push_back({d, speaker, "", EmotionFromId(static_cast<int>(rng.Below(kNumEmotions)))});
      }
    }
  }

  const int f = cfg.frames_per_turn;
  const int onset = std::clamp(static_cast<int>(std::lround(cfg.onset_fraction * f)), 1, f - 1);
  const int side = cfg.face_side;
  const int slots = SlotsPerSide(cfg);
  const int spare =
      cfg.distractors > 0
          ? cfg.distractor_offset_max - cfg.distractor_offset_min - (slots - 1) * SlotSpacing(cfg)
          : 0;
  const int y_lo = std::max(0, cfg.height / 2 - side / 2 - 60);
  const int y_hi = std::min(cfg.height - side, cfg.height / 2 - side / 2 + 60);

  for (std::size_t i = 0; i < plan.size(); ++i) {
    auto& p = plan[i];
    if (p.text.empty()) {
      const auto& kws = EmotionKeywords()[EmotionId(p.emotion)];
      const bool noisy = rng.Uniform() < cfg.text_noise;
      const std::string_view kw = kws[rng.Below(kws.size())];
      p.text = noisy ? FillerText(rng) : KeywordText(rng, kw);
    }
    const int jitter = static_cast<int>(rng.Below(2 * cfg.center_jitter + 1)) - cfg.center_jitter;
    const int ay = y_lo + static_cast<int>(rng.Below(static_cast<std::uint64_t>(y_hi - y_lo + 1)));
    FaceInstance active;
    active.box = {cfg.width / 2 - side / 2 + jitter, ay, side, side, 1.0, percept::FaceRole::kActive};
    active.identity = static_cast<std::uint32_t>(p.dialogue) * 16;

    std::vector<FaceInstance> others;
    const int first_side = rng.Below(2) == 0 ? -1 : 1;
    int cumulative[2] = {0, 0};
    for (int j = 0; j < cfg.distractors; ++j) {
      const int dir = (j % 2 == 0) ? first_side : -first_side;
      const int slot = j / 2;
      cumulative[j % 2] += static_cast<int>(rng.Below(static_cast<std::uint64_t>(spare / slots + 1)));
      const int dx = cfg.distractor_offset_min + slot * SlotSpacing(cfg) + cumulative[j % 2];
      const int cx = cfg.width / 2 + dir * dx;
      const int dy = y_lo + static_cast<int>(rng.Below(static_cast<std::uint64_t>(y_hi - y_lo + 1)));
      FaceInstance d;
      d.box = {cx - side / 2, dy, side, side, 1.0, percept::FaceRole::kDistractor};
      d.identity = active.identity + 1 + static_cast<std::uint32_t>(j);
      d.shown = OtherEmotion(rng, p.emotion);
      others.push_back(d);
    }

    ScriptTurn st;
    st.dialogue = p.dialogue;
    st.first_seq = s.frame_count;
    st.last_seq = s.frame_count + static_cast<std::uint64_t>(f) - 1;
    st.turn.index = static_cast<std::uint32_t>(i);
    st.turn.speaker = p.speaker;
    st.turn.text = p.text;
    st.turn.gold_emotion = p.emotion;
    for (int k = 0; k < f; ++k) {
      std::vector<FaceInstance> scene;
      FaceInstance a = active;
      a.shown = k < onset ? EmotionLabel::kNeutral : p.emotion;
      scene.push_back(a);
      scene.insert(scene.end(), others.begin(), others.end());
      std::vector<percept::FaceBox> boxes;
      for (const auto& face : scene) boxes.push_back(face.box);
      s.annotations.Set(s.frame_count, std::move(boxes));
      s.scenes.push_back(std::move(scene));
      ++s.frame_count;
    }
    st.turn.start_ts_us = s.FrameTimestamp(st.first_seq);
    st.turn.end_ts_us = s.FrameTimestamp(st.last_seq);
    s.turns.push_back(std::move(st));
  }
  return s;
}

std::string GenConfigToJson(const SyntheticGenConfig& cfg) {
  json script = json::array();
  for (const auto& t : cfg.script) {
    json j = {{"emotion", std::string(EmotionName(t.emotion))}};
    if (t.speaker) j["speaker"] = *t.speaker;
    if (t.text) j["text"] = *t.text;
    script.push_back(std::move(j));
  }
  const json j = {{"seed", cfg.seed},
                  {"session_id", cfg.session_id},
                  {"width", cfg.width},
                  {"height", cfg.height},
                  {"fps", cfg.fps},
                  {"dialogues", cfg.dialogues},
                  {"turns_per_dialogue", cfg.turns_per_dialogue},
                  {"frames_per_turn", cfg.frames_per_turn},
                  {"face_side", cfg.face_side},
                  {"distractors", cfg.distractors},
                  {"distractor_offset_min", cfg.distractor_offset_min},
                  {"distractor_offset_max", cfg.distractor_offset_max},
                  {"center_jitter", cfg.center_jitter},
                  {"text_noise", cfg.text_noise},
                  {"onset_fraction", cfg.onset_fraction},
                  {"script", std::move(script)}};
  return j.dump(2);
}

SyntheticGenConfig GenConfigFromJson(const std::string& text) {
  SyntheticGenConfig cfg;
  try {
    const json j = json::parse(text);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.session_id = j.value("session_id", cfg.session_id);
    cfg.width = j.value("width", cfg.width);
    cfg.height = j.value("height", cfg.height);
    cfg.fps = j.value("fps", cfg.fps);
    cfg.dialogues = j.value("dialogues", cfg.dialogues);
    cfg.turns_per_dialogue = j.value("turns_per_dialogue", cfg.turns_per_dialogue);
    cfg.frames_per_turn = j.value("frames_per_turn", cfg.frames_per_turn);
    cfg.face_side = j.value("face_side", cfg.face_side);
    cfg.distractors = j.value("distractors", cfg.distractors);
    cfg.distractor_offset_min = j.value("distractor_offset_min", cfg.distractor_offset_min);
    cfg.distractor_offset_max = j.value("distractor_offset_max", cfg.distractor_offset_max);
    cfg.center_jitter = j.value("center_jitter", cfg.center_jitter);
    cfg.text_noise = j.value("text_noise", cfg.text_noise);
    cfg.onset_fraction = j.value("onset_fraction", cfg.onset_fraction);
    if (j.contains("script")) {
      for (const auto& t : j.at("script")) {
        ScriptedTurn st;
        const auto name = t.at("emotion").get<std::string>();
        const auto label = ParseEmotion(name);
        if (!label) ScriptFail("unknown emotion '" + name + "'");
        st.emotion = *label;
        if (t.contains("speaker")) st.speaker = t.at("speaker").get<std::string>();
        if (t.contains("text")) st.text = t.at("text").get<std::string>();
        cfg.script.push_back(std::move(st));
      }
    }
  } catch (const json::exception& e) {
    ScriptFail(std::string("bad generator config: ") + e.what());
  }
  return cfg;
}

std::string SessionToJson(const SessionScript& script) {
  json turns = json::array();
  for (const auto& t : script.turns) turns.push_back(TurnToJson(t));
  json frames;
  if (script.generator) {
    frames = {{"source", "synthetic"}, {"generator", json::parse(GenConfigToJson(*script.generator))}};
  } else {
    frames = {{"source", "directory"}, {"path", script.frame_dir.filename().string()}};
  }
  const json j = {{"session_id", script.session_id},
                  {"fps", script.fps},
                  {"width", script.width},
                  {"height", script.height},
                  {"frame_count", script.frame_count},
                  {"frames", std::move(frames)},
                  {"annotations", "annotations.json"},
                  {"turns", std::move(turns)}};
  return j.dump(2);
}

void SaveSession(const SessionScript& script, const fs::path& dir, bool render_frames) {
  fs::create_directories(dir);
  SessionScript out = script;
  if (render_frames) {
    const fs::path frames = dir / "frames";
    fs::create_directories(frames);
    for (std::uint64_t seq = 0; seq < script.frame_count; ++seq) {
      WritePpm(script.Frame(seq), frames / FrameFileName(seq));
    }
    out.generator.reset();
    out.scenes.clear();
    out.frame_dir = frames;
  }
  WriteFile(dir / "session.json", SessionToJson(out) + "\n");
  WriteFile(dir / "annotations.json", script.annotations.ToJson() + "\n");
}

SessionScript LoadSession(const fs::path& path) {
  const fs::path file = fs::is_directory(path) ? path / "session.json" : path;
  const fs::path dir = file.parent_path();
  SessionScript s;
  try {
    const json j = json::parse(ReadFile(file));
    s.session_id = j.at("session_id").get<std::string>();
    s.fps = j.at("fps").get<int>();
    s.width = j.at("width").get<int>();
    s.height = j.at("height").get<int>();
    s.frame_count = j.at("frame_count").get<std::uint64_t>();
    const auto& frames = j.at("frames");
    const auto source = frames.at("source").get<std::string>();
    if (source == "synthetic") {
      const auto regenerated =
          GenerateSyntheticSession(GenConfigFromJson(frames.at("generator").dump()));
      if (regenerated.frame_count != s.frame_count) ScriptFail("generator disagrees with frame_count");
      s.generator = regenerated.generator;
      s.scenes = regenerated.scenes;
    } else if (source == "directory") {
      s.frame_dir = dir / frames.at("path").get<std::string>();
    } else {
      ScriptFail("unknown frame source '" + source + "'");
    }
    if (j.contains("annotations")) {
      s.annotations = percept::AnnotatedDetector::FromJson(
          ReadFile(dir / j.at("annotations").get<std::string>()));
    }
    for (const auto& t : j.at("turns")) s.turns.push_back(TurnFromJson(t));
  } catch (const json::exception& e) {
    ScriptFail("bad session file " + file.string() + ": " + e.what());
  }
  s.Validate();
  return s;
}

void WritePpm(const wire::FrameMsg& frame, const fs::path& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) ScriptFail("cannot write " + path.string());
  f << "P6\n" << frame.width << ' ' << frame.height << "\n255\n";
  f.write(reinterpret_cast<const char*>(frame.pixels.data()),
          static_cast<std::streamsize>(frame.pixels.size()));
}

wire::FrameMsg ReadPpm(const fs::path& path, std::uint64_t seq, std::uint64_t timestamp_us) {
  const std::string data = ReadFile(path);
  std::istringstream in(data);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || w <= 0 || h <= 0 || w > 65535 || h > 65535 || maxval != 255) {
    ScriptFail("unsupported image " + path.string() + " (binary 8-bit PPM expected)");
  }
  in.get();
  const auto offset = static_cast<std::size_t>(in.tellg());
  wire::FrameMsg f;
  f.seq = seq;
  f.timestamp_us = timestamp_us;
  f.width = static_cast<std::uint16_t>(w);
  f.height = static_cast<std::uint16_t>(h);
  if (data.size() - offset < f.expected_pixel_bytes()) ScriptFail("truncated image " + path.string());
  f.pixels.assign(data.begin() + static_cast<std::ptrdiff_t>(offset),
                  data.begin() + static_cast<std::ptrdiff_t>(offset + f.expected_pixel_bytes()));
  return f;
}

std::vector<std::vector<std::size_t>> TurnsByDialogue(const SessionScript& script) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<int> ids;
  for (std::size_t i = 0; i < script.turns.size(); ++i) {
    const int d = script.turns[i].dialogue;
    auto it = std::find(ids.begin(), ids.end(), d);
    if (it == ids.end()) {
      ids.push_back(d);
      out.emplace_back();
      it = ids.end() - 1;
    }
    out[static_cast<std::size_t>(it - ids.begin())].push_back(i);
  }
  return out;
}

}  // namespace affectlink::harness
