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

#ifndef AFFECTLINK_EMPATHY_EMOTION_HPP
#define AFFECTLINK_EMPATHY_EMOTION_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <string_view>

namespace affectlink {

// Label order is shared by the wire format, the model head and the metrics.
enum class EmotionLabel : std::uint8_t {
  kNeutral = 0,
  kSurprise = 1,
  kFear = 2,
  kSadness = 3,
  kJoy = 4,
  kDisgust = 5,
  kAnger = 6,
};

inline constexpr int kNumEmotions = 7;

inline constexpr std::array<std::string_view, kNumEmotions> kEmotionNames = {
    "neutral", "surprise", "fear", "sadness", "joy", "disgust", "anger"};

inline constexpr std::string_view EmotionName(EmotionLabel label) {
  return kEmotionNames[static_cast<std::size_t>(label)];
}

inline constexpr bool IsValidEmotionId(int id) {
  return id >= 0 && id < kNumEmotions;
}

inline constexpr EmotionLabel EmotionFromId(int id) {
  return static_cast<EmotionLabel>(id);
}

inline constexpr int EmotionId(EmotionLabel label) {
  return static_cast<int>(label);
}

inline std::optional<EmotionLabel> ParseEmotion(std::string_view name) {
  for (int i = 0; i < kNumEmotions; ++i) {
    if (kEmotionNames[i] == name) return EmotionFromId(i);
  }
  return std::nullopt;
}

// Softmax output over the seven labels, in label order.
using EmotionDistribution = std::array<double, kNumEmotions>;

// First label with the highest probability.
inline EmotionLabel ArgmaxEmotion(const EmotionDistribution& p) {
  int best = 0;
  for (int i = 1; i < kNumEmotions; ++i) {
    if (p[static_cast<std::size_t>(i)] > p[static_cast<std::size_t>(best)]) best = i;
  }
  return EmotionFromId(best);
}

}  // namespace affectlink

#endif  // AFFECTLINK_EMPATHY_EMOTION_HPP
