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

#ifndef AFFECTLINK_CONTEXT_DIALOGUE_HPP
#define AFFECTLINK_CONTEXT_DIALOGUE_HPP

#include <cstddef>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "affectlink/empathy/emotion.hpp"

namespace affectlink::context {

struct Turn {
  std::uint32_t index = 0;
  std::optional<std::string> speaker;
  std::string text;
  std::uint64_t start_ts_us = 0;
  std::uint64_t end_ts_us = 0;
  std::optional<EmotionLabel> gold_emotion;  // harness only

  friend bool operator==(const Turn&, const Turn&) = default;
};

struct ContextConfig {
  int k = 4;
  bool named = false;
  std::size_t max_tokens = 256;
};

// Ordered turns with contiguous indices; the oldest turns fall off once
// `retention` is exceeded.
class DialogueHistory {
 public:
  explicit DialogueHistory(std::size_t retention = 16);

  // Throws Error{kNonContiguousTurn} unless turn.index follows the last
  // pushed index (any index is accepted for the very first push), and
  // Error{kInvalidConfig} for an empty text or inverted window.
  void Push(Turn turn);

  // Forgets retained turns but keeps the index continuity requirement.
  void Clear() { turns_.clear(); }

  const std::deque<Turn>& turns() const { return turns_; }
  bool empty() const { return turns_.empty(); }
  std::size_t size() const { return turns_.size(); }
  std::size_t retention() const { return retention_; }

 private:
  std::size_t retention_;
  std::deque<Turn> turns_;
  std::optional<std::uint32_t> last_index_;
};

// Rendered context window plus prompt. Holds exactly one "<mask>".
struct ContextString {
  std::string text;
  std::size_t mask_offset = 0;  // byte offset of "<mask>" in text
};

inline constexpr const char* kMaskToken = "<mask>";
inline constexpr const char* kSepToken = "<sep>";

// Renders the last min(k, t) + 1 turns and appends the prompt
// "for {u_t}, {s_t | speaker} feels <mask>". Pieces are joined by " <sep> ".
// Throws Error{kNoCurrentTurn} on an empty history.
ContextString BuildContext(const DialogueHistory& history, const ContextConfig& cfg);

// Same rendering over an explicit turn list (the last element is the current
// turn).
ContextString BuildContext(const std::vector<Turn>& turns, const ContextConfig& cfg);

// Replaces literal special tokens in user text so they cannot be confused
// with the rendered separators and mask.
std::string EscapeSpecialTokens(const std::string& text);

}  // namespace affectlink::context

#endif  // AFFECTLINK_CONTEXT_DIALOGUE_HPP
