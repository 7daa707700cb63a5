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

#ifndef AFFECTLINK_WIRE_ROBOT_SIMULATOR_HPP
#define AFFECTLINK_WIRE_ROBOT_SIMULATOR_HPP

#include <chrono>
#include <cstdint>
#include <string>
#include <vector>

#include "affectlink/error.hpp"
#include "affectlink/wire/protocol.hpp"
#include "affectlink/wire/socket.hpp"

namespace affectlink::wire {

struct ScheduledTurn {
  TurnMsg turn;
  // Sent right after this frame index has been streamed (or skipped).
  std::uint64_t after_frame = 0;
};

// What the simulated robot streams.
class SimulatorSource {
 public:
  virtual ~SimulatorSource() = default;
  virtual SessionMetaMsg Meta() const = 0;
  virtual std::uint64_t FrameCount() const = 0;
  virtual FrameMsg Frame(std::uint64_t index) const = 0;
  virtual std::vector<ScheduledTurn> Turns() const = 0;
};

struct SimulatorConfig {
  Endpoint target;
  double fps = 25.0;
  std::chrono::milliseconds heartbeat_interval{1000};
  int missed_heartbeats = 5;
  // How long to wait for outstanding EXPR_CMDs after the last message.
  std::chrono::milliseconds response_timeout{10000};
  // Skip a frame when the socket is not writable instead of queueing it.
  bool drop_on_backpressure = true;
};

struct ReceivedCommand {
  ExprCmdMsg command;
  std::uint64_t arrival_us = 0;  // since the session started
  double latency_ms = 0.0;       // TURN sent -> EXPR_CMD received
};

struct SessionLog {
  std::string session_id;
  std::vector<ReceivedCommand> commands;  // arrival order
  std::uint64_t frames_sent = 0;
  std::uint64_t frames_dropped = 0;
  std::uint64_t turns_sent = 0;
  std::uint64_t heartbeats_sent = 0;
  std::uint64_t heartbeats_received = 0;
  std::uint64_t decode_errors = 0;
  double duration_s = 0.0;
  bool partial = false;
  std::string error;

  // The received EXPR_CMD messages re-encoded back to back.
  std::vector<std::uint8_t> ExprBytes() const;
  std::string ToJson() const;
};

// Connection refused or lost. Carries everything logged before the failure.
class TransportFailure : public Error {
 public:
  TransportFailure(const std::string& what, SessionLog partial)
      : Error(ErrorCode::kTransportError, what), log_(std::move(partial)) {}
  const SessionLog& log() const { return log_; }

 private:
  SessionLog log_;
};

// Streams SESSION_META, then frames at `fps` with each turn sent after its
// last frame, then waits for one EXPR_CMD per turn and closes. Throws
// TransportFailure.
SessionLog RunRobotSimulator(const SimulatorSource& source, const SimulatorConfig& cfg);

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_ROBOT_SIMULATOR_HPP
