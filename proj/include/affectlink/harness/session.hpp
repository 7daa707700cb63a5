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

#ifndef AFFECTLINK_HARNESS_SESSION_HPP
#define AFFECTLINK_HARNESS_SESSION_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "affectlink/context/dialogue.hpp"
#include "affectlink/harness/glyph.hpp"
#include "affectlink/percept/face.hpp"
#include "affectlink/wire/protocol.hpp"

namespace affectlink::harness {

// A scripted turn for the generator. Missing fields are drawn from the seed.
struct ScriptedTurn {
  std::optional<std::string> speaker;
  std::optional<std::string> text;
  EmotionLabel emotion = EmotionLabel::kNeutral;
};

struct SyntheticGenConfig {
  std::uint64_t seed = 0;
  std::string session_id = "synthetic";
  int width = 640;
  int height = 480;
  int fps = 25;
  int dialogues = 1;
  int turns_per_dialogue = 4;
  int frames_per_turn = 16;
  int face_side = 64;
  int distractors = 0;
  int distractor_offset_min = 100;
  int distractor_offset_max = 250;
  int center_jitter = 10;
  double text_noise = 0.0;  // probability a turn text carries no keyword
  double onset_fraction = 0.25;  // leading neutral frames of each turn
  // Replaces the random dialogue plan; all turns form one dialogue.
  std::vector<ScriptedTurn> script;

  // Throws Error{kScriptError} for layouts that cannot be rendered.
  void Validate() const;
};

struct ScriptTurn {
  context::Turn turn;  // gold_emotion set
  int dialogue = 0;
  std::uint64_t first_seq = 0;
  std::uint64_t last_seq = 0;
};

struct SessionScript {
  std::string session_id;
  int fps = 25;
  int width = 640;
  int height = 480;
  std::uint64_t frame_count = 0;
  // Exactly one frame source: a generator (scenes are derived from it) or a
  // directory of binary PPM files named <seq, 8 digits>.ppm.
  std::optional<SyntheticGenConfig> generator;
  std::filesystem::path frame_dir;
  std::vector<std::vector<FaceInstance>> scenes;
  percept::AnnotatedDetector annotations;
  std::vector<ScriptTurn> turns;

  std::uint64_t FrameTimestamp(std::uint64_t seq) const;
  wire::FrameMsg Frame(std::uint64_t seq) const;
  // Frames with start <= timestamp <= end, ascending.
  std::vector<wire::FrameMsg> FramesInWindow(std::uint64_t start_us, std::uint64_t end_us) const;
  wire::SessionMetaMsg Meta() const;

  // Throws Error{kScriptError}: turn windows outside the frame range, turn
  // indices out of order, annotations for missing seqs.
  void Validate() const;
};

SessionScript GenerateSyntheticSession(const SyntheticGenConfig& cfg);

std::string GenConfigToJson(const SyntheticGenConfig& cfg);
SyntheticGenConfig GenConfigFromJson(const std::string& text);

// session.json plus annotations.json in `dir`. With `render_frames`, frames
// are written as PPM files under dir/frames and the script points at them.
void SaveSession(const SessionScript& script, const std::filesystem::path& dir,
                 bool render_frames = false);
// Accepts the session directory or the session.json path.
SessionScript LoadSession(const std::filesystem::path& path);
std::string SessionToJson(const SessionScript& script);

void WritePpm(const wire::FrameMsg& frame, const std::filesystem::path& path);
wire::FrameMsg ReadPpm(const std::filesystem::path& path, std::uint64_t seq,
                       std::uint64_t timestamp_us);

// Sets of turn indices grouped by dialogue, in turn order.
std::vector<std::vector<std::size_t>> TurnsByDialogue(const SessionScript& script);

}  // namespace affectlink::harness

#endif  // AFFECTLINK_HARNESS_SESSION_HPP
