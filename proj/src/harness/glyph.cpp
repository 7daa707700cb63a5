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

#include "affectlink/harness/glyph.hpp"

#include <algorithm>

namespace affectlink::harness {
namespace {

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t CellKey(int u, int v, int c) {
  return (static_cast<std::uint64_t>(u) << 16) | (static_cast<std::uint64_t>(v) << 8) |
         static_cast<std::uint64_t>(c);
}

int IdentityBase(std::uint32_t identity, int c) {
  return 64 + static_cast<int>(Mix(0xface0000ULL + identity * 7ULL + c) % 49);
}

int IdentityTexture(std::uint32_t identity, int u, int v, int c) {
  return static_cast<int>(Mix((std::uint64_t{identity} << 32) ^ CellKey(u, v, c) ^ 0x7e47ULL) % 25);
}

}  // namespace

int GlyphOffset(EmotionLabel e, int u, int v, int c) {
  const int cu = ((u % kGlyphPeriod) + kGlyphPeriod) % kGlyphPeriod;
  const int cv = ((v % kGlyphPeriod) + kGlyphPeriod) % kGlyphPeriod;
  const std::uint64_t h = Mix(0x61797068ULL + 131ULL * EmotionId(e)) ^ CellKey(cu, cv, c);
  return (Mix(h) & 1ULL) != 0 ? kGlyphAmplitude : 0;
}

std::array<double, kGlyphCellSize> GlyphDeltaCell(EmotionLabel e) {
  std::array<double, kGlyphCellSize> out{};
  for (int v = 0; v < kGlyphPeriod; ++v) {
    for (int u = 0; u < kGlyphPeriod; ++u) {
      for (int c = 0; c < 3; ++c) {
        const int d = GlyphOffset(e, u, v, c) - GlyphOffset(EmotionLabel::kNeutral, u, v, c);
        out[static_cast<std::size_t>((v * kGlyphPeriod + u) * 3 + c)] = d / 255.0;
      }
    }
  }
  return out;
}

wire::FrameMsg RenderFrame(std::uint64_t seq, std::uint64_t timestamp_us, int width, int height,
                           const std::vector<FaceInstance>& faces) {
  wire::FrameMsg f;
  f.seq = seq;
  f.timestamp_us = timestamp_us;
  f.width = static_cast<std::uint16_t>(width);
  f.height = static_cast<std::uint16_t>(height);
  f.pixels.resize(static_cast<std::size_t>(width) * height * 3);
  const auto shift = static_cast<int>(seq % 16);
  for (int y = 0; y < height; ++y) {
    std::uint8_t* row = f.pixels.data() + static_cast<std::size_t>(y) * width * 3;
    for (int x = 0; x < width; ++x) {
      const auto g = static_cast<std::uint8_t>(((x * 7 + y * 13 + shift) & 15) + 4);
      row[3 * x] = g;
      row[3 * x + 1] = g;
      row[3 * x + 2] = static_cast<std::uint8_t>(g + 6);
    }
  }
  for (const auto& face : faces) {
    const auto& b = face.box;
    for (int v = 0; v < b.h; ++v) {
      const int y = b.y + v;
      if (y < 0 || y >= height) continue;
      for (int u = 0; u < b.w; ++u) {
        const int x = b.x + u;
        if (x < 0 || x >= width) continue;
        std::uint8_t* px = f.pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
        for (int c = 0; c < 3; ++c) {
          const int value = IdentityBase(face.identity, c) + IdentityTexture(face.identity, u, v, c) +
                            GlyphOffset(face.shown, u, v, c);
          px[c] = static_cast<std::uint8_t>(std::min(value, 255));
        }
      }
    }
  }
  return f;
}

const std::array<std::vector<std::string_view>, kNumEmotions>& EmotionKeywords() {
  static const std::array<std::vector<std::string_view>, kNumEmotions> kKeywords = {{
      {"calm", "okay", "ordinary", "fine"},
      {"surprised", "unexpected", "wow", "shocked"},
      {"scared", "afraid", "terrified", "nervous"},
      {"sad", "unhappy", "miserable", "heartbroken"},
      {"happy", "glad", "delighted", "accepted"},
      {"disgusting", "gross", "revolting", "nasty"},
      {"angry", "furious", "annoyed", "mad"},
  }};
  return kKeywords;
}

}  // namespace affectlink::harness
