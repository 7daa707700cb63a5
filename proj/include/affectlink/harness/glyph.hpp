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

#ifndef AFFECTLINK_HARNESS_GLYPH_HPP
#define AFFECTLINK_HARNESS_GLYPH_HPP

// Synthetic faces. A face is an identity layer (base color plus a fixed
// per-person texture) with an expression glyph added on top. Glyphs tile
// with period kGlyphPeriod from the face box origin, so every patch of a
// crop aligned to the box carries the same glyph cell.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "affectlink/empathy/emotion.hpp"
#include "affectlink/percept/face.hpp"
#include "affectlink/wire/protocol.hpp"

namespace affectlink::harness {

inline constexpr int kGlyphPeriod = 8;
inline constexpr int kGlyphAmplitude = 72;
inline constexpr int kGlyphCellSize = kGlyphPeriod * kGlyphPeriod * 3;

// Glyph intensity (0 or kGlyphAmplitude) at face-local pixel (u, v), channel c.
int GlyphOffset(EmotionLabel e, int u, int v, int c);

// Mean over one glyph cell of (glyph e - neutral glyph) in [-1, 1] units,
// laid out like a patch: (row * period + col) * 3 + channel.
std::array<double, kGlyphCellSize> GlyphDeltaCell(EmotionLabel e);

struct FaceInstance {
  percept::FaceBox box;
  std::uint32_t identity = 0;
  EmotionLabel shown = EmotionLabel::kNeutral;
};

// Renders faces over a dark textured background. Face pixels always sum to
// more than 96 across channels and background pixels never do.
wire::FrameMsg RenderFrame(std::uint64_t seq, std::uint64_t timestamp_us, int width, int height,
                           const std::vector<FaceInstance>& faces);

// Emotion keywords shared by the text generator and the stub classifier.
const std::array<std::vector<std::string_view>, kNumEmotions>& EmotionKeywords();

}  // namespace affectlink::harness

#endif  // AFFECTLINK_HARNESS_GLYPH_HPP
