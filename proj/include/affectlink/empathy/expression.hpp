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

#ifndef AFFECTLINK_EMPATHY_EXPRESSION_HPP
#define AFFECTLINK_EMPATHY_EXPRESSION_HPP

#include <chrono>
#include <cstdint>
#include <mutex>
#include <vector>

#include "affectlink/empathy/emotion.hpp"
#include "affectlink/wire/protocol.hpp"

namespace affectlink::empathy {

struct ExpressionCommand {
  EmotionLabel expression = EmotionLabel::kNeutral;
  std::uint32_t turn_index = 0;
  // Session clock (the triggering turn's end timestamp), so the command bytes
  // are reproducible across runs.
  std::uint64_t issue_ts_us = 0;
  bool fallback = false;

  friend bool operator==(const ExpressionCommand&, const ExpressionCommand&) = default;
};

// Parallel empathy: the robot shows the emotion it recognized.
ExpressionCommand MapEmotion(EmotionLabel label, std::uint32_t turn_index = 0,
                             std::uint64_t issue_ts_us = 0);

wire::ExprCmdMsg ToWire(const ExpressionCommand& cmd);
ExpressionCommand FromWire(const wire::ExprCmdMsg& msg);

struct ExecutionRecord {
  ExpressionCommand command;
  double latency_ms = 0.0;  // wall clock since the triggering turn arrived
};

// Stand-in for the robot face: records each executed command.
class SimulatedActuator {
 public:
  using Clock = std::chrono::steady_clock;

  // Appends a record and returns the EXPR_CMD wire message to send back.
  wire::ExprCmdMsg Execute(const ExpressionCommand& cmd, Clock::time_point turn_arrival);

  std::vector<ExecutionRecord> log() const;
  EmotionLabel current() const;

 private:
  mutable std::mutex mu_;
  std::vector<ExecutionRecord> log_;
  EmotionLabel current_ = EmotionLabel::kNeutral;
};

}  // namespace affectlink::empathy

#endif  // AFFECTLINK_EMPATHY_EXPRESSION_HPP
