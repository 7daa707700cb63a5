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

#include "affectlink/context/dialogue.hpp"

#include <algorithm>

#include "affectlink/error.hpp"

namespace affectlink::context {
namespace {

void ReplaceAll(std::string& s, const std::string& from, const std::string& to) {
  std::size_t pos = 0;
  while ((pos = s.find(from, pos)) != std::string::npos) {
    s.replace(pos, from.size(), to);
    pos += to.size();
  }
}

}  // namespace

DialogueHistory::DialogueHistory(std::size_t retention) : retention_(retention) {
  if (retention_ == 0) {
    throw Error(ErrorCode::kInvalidConfig, "history retention must be positive");
  }
}

void DialogueHistory::Push(Turn turn) {
  if (turn.text.empty()) {
    throw Error(ErrorCode::kInvalidConfig, "turn text is empty");
  }
  if (turn.start_ts_us > turn.end_ts_us) {
    throw Error(ErrorCode::kInvalidConfig, "turn window is inverted");
  }
  if (last_index_ && turn.index != *last_index_ + 1) {
    throw Error(ErrorCode::kNonContiguousTurn,
                "expected turn " + std::to_string(*last_index_ + 1) + ", got " +
                    std::to_string(turn.index));
  }
  last_index_ = turn.index;
  turns_.push_back(std::move(turn));
  while (turns_.size() > retention_) turns_.pop_front();
}

std::string EscapeSpecialTokens(const std::string& text) {
  std::string out = text;
  ReplaceAll(out, "<mask>", "< mask >");
  ReplaceAll(out, "<sep>", "< sep >");
  return out;
}

ContextString BuildContext(const std::vector<Turn>& turns, const ContextConfig& cfg) {
  if (turns.empty()) {
    throw Error(ErrorCode::kNoCurrentTurn, "dialogue history is empty");
  }
  if (cfg.k < 0) throw Error(ErrorCode::kInvalidConfig, "k must be >= 0");

  const std::size_t available = turns.size() - 1;
  const std::size_t window = std::min<std::size_t>(static_cast<std::size_t>(cfg.k), available);
  const auto first = turns.end() - static_cast<std::ptrdiff_t>(window + 1);

  auto speaker_of = [&](const Turn& t) -> std::string {
    if (cfg.named && t.speaker && !t.speaker->empty()) return EscapeSpecialTokens(*t.speaker);
    return "speaker";
  };

  std::string text;
  for (auto it = first; it != turns.end(); ++it) {
    if (cfg.named && it->speaker && !it->speaker->empty()) {
      text += EscapeSpecialTokens(*it->speaker) + ": ";
    }
    text += EscapeSpecialTokens(it->text);
    text += " <sep> ";
  }
  const Turn& current = turns.back();
  text += "for " + EscapeSpecialTokens(current.text) + ", " + speaker_of(current) + " feels ";
  ContextString cs;
  cs.mask_offset = text.size();
  text += kMaskToken;
  cs.text = std::move(text);
  return cs;
}

ContextString BuildContext(const DialogueHistory& history, const ContextConfig& cfg) {
  return BuildContext(std::vector<Turn>(history.turns().begin(), history.turns().end()), cfg);
}

}  // namespace affectlink::context
