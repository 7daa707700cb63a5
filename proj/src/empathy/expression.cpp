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

#include "affectlink/empathy/expression.hpp"

#include <algorithm>

#include "affectlink/error.hpp"

namespace affectlink::empathy {

ExpressionCommand MapEmotion(EmotionLabel label, std::uint32_t turn_index,
                             std::uint64_t issue_ts_us) {
  ExpressionCommand cmd;
  cmd.expression = label;
  cmd.turn_index = turn_index;
  cmd.issue_ts_us = issue_ts_us;
  return cmd;
}

wire::ExprCmdMsg ToWire(const ExpressionCommand& cmd) {
  wire::ExprCmdMsg msg;
  msg.turn_index = cmd.turn_index;
  msg.expression = static_cast<std::uint8_t>(EmotionId(cmd.expression));
  msg.flags = cmd.fallback ? wire::ExprCmdMsg::kFlagFallback : 0;
  msg.issue_ts_us = cmd.issue_ts_us;
  return msg;
}

ExpressionCommand FromWire(const wire::ExprCmdMsg& msg) {
  if (!IsValidEmotionId(msg.expression)) {
    throw Error(ErrorCode::kMalformedPayload, "expression id out of range");
  }
  ExpressionCommand cmd;
  cmd.expression = EmotionFromId(msg.expression);
  cmd.turn_index = msg.turn_index;
  cmd.issue_ts_us = msg.issue_ts_us;
  cmd.fallback = msg.fallback();
  return cmd;
}

wire::ExprCmdMsg SimulatedActuator::Execute(const ExpressionCommand& cmd,
                                            Clock::time_point turn_arrival) {
  const auto elapsed = Clock::now() - turn_arrival;
  const double ms = std::max(0.0, std::chrono::duration<double, std::milli>(elapsed).count());
  {
    std::lock_guard lock(mu_);
    log_.push_back({cmd, ms});
    current_ = cmd.expression;
  }
  return ToWire(cmd);
}

std::vector<ExecutionRecord> SimulatedActuator::log() const {
  std::lock_guard lock(mu_);
  return log_;
}

EmotionLabel SimulatedActuator::current() const {
  std::lock_guard lock(mu_);
  return current_;
}

}  // namespace affectlink::empathy
