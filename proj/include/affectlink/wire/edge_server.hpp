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

#ifndef AFFECTLINK_WIRE_EDGE_SERVER_HPP
#define AFFECTLINK_WIRE_EDGE_SERVER_HPP

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "affectlink/empathy/expression.hpp"
#include "affectlink/wire/protocol.hpp"
#include "affectlink/wire/ring_buffer.hpp"
#include "affectlink/wire/socket.hpp"

namespace affectlink::wire {

struct HandlerResult {
  empathy::ExpressionCommand command;
  std::optional<EmotionDistribution> probabilities;
};

// Called once per turn with the frames buffered inside the turn window (may
// be empty). Calls are serialized.
using TurnHandler =
    std::function<HandlerResult(const TurnMsg& turn, const std::vector<FrameMsg>& snapshot)>;

struct EdgeServerConfig {
  Endpoint listen{"127.0.0.1", 0};
  std::optional<Endpoint> gateway;
  std::size_t buffer_capacity = kDefaultRingCapacity;
  std::chrono::milliseconds heartbeat_interval{1000};
  int missed_heartbeats = 5;
  // Served under /console on the gateway port when non-empty.
  std::filesystem::path console_dir;
  // Window for gateway turns that carry no timestamps.
  std::chrono::milliseconds gateway_turn_window{2000};
};

struct ServerStats {
  std::uint64_t sessions = 0;
  std::uint64_t frames_received = 0;
  std::uint64_t frames_rejected = 0;
  std::uint64_t decode_errors = 0;
  std::uint64_t turns_received = 0;
  std::uint64_t turns_handled = 0;
  std::uint64_t handler_errors = 0;
  std::uint64_t heartbeats_received = 0;
  std::uint64_t heartbeats_sent = 0;
  std::uint64_t gateway_frames = 0;
  std::uint64_t gateway_turns = 0;
};

// Edge side of the robot link. One robot connection at a time: frames go to
// the ring buffer on the reader thread, turns are handled on a separate worker
// thread, and every turn yields exactly one EXPR_CMD (a neutral fallback when
// the handler fails). A second port speaks newline-delimited JSON (and plain
// HTTP for the browser console).
class EdgeServer {
 public:
  EdgeServer(EdgeServerConfig cfg, TurnHandler handler);
  ~EdgeServer();
  EdgeServer(const EdgeServer&) = delete;
  EdgeServer& operator=(const EdgeServer&) = delete;

  // Binds both ports and starts serving. Throws Error{kTransportError}.
  void Start();
  void Stop();

  std::uint16_t port() const { return robot_listener_.port(); }
  std::uint16_t gateway_port() const { return gateway_listener_.port(); }

  ServerStats stats() const;
  std::vector<empathy::ExecutionRecord> executions() const { return actuator_.log(); }
  std::vector<std::string> error_log() const;
  std::optional<SessionMetaMsg> session_meta() const;
  bool robot_connected() const { return robot_connected_.load(); }

  // Blocks until `count` robot sessions have ended.
  bool WaitForSessions(std::uint64_t count, std::chrono::milliseconds timeout) const;

  // One gateway request or NDJSON line; returns the JSON reply.
  std::string HandleGatewayJson(const std::string& line);

 private:
  struct PendingTurn {
    TurnMsg turn;
    std::chrono::steady_clock::time_point arrival;
  };
  struct SessionState;

  void RobotAcceptLoop();
  void RunSession(Socket socket);
  void TurnWorker(SessionState& session);
  void GatewayAcceptLoop();
  void ServeGatewayConnection(Socket& socket);
  std::string ServeHttp(const std::string& head, const std::string& body);

  // Runs the handler with the fallback policy and records the execution.
  HandlerResult HandleTurn(const TurnMsg& turn, std::chrono::steady_clock::time_point arrival,
                           ExprCmdMsg* wire_out, std::size_t* snapshot_size);
  std::shared_ptr<FrameRingBuffer> CurrentBuffer() const;
  void LogError(const std::string& message);
  void Bump(std::uint64_t ServerStats::*field, std::uint64_t by = 1);
  std::uint64_t NowUs() const;

  EdgeServerConfig cfg_;
  TurnHandler handler_;
  Listener robot_listener_;
  Listener gateway_listener_;
  std::atomic<bool> running_{false};
  std::thread robot_thread_;
  std::thread gateway_thread_;

  std::shared_ptr<FrameRingBuffer> buffer_;  // accessed with atomic_load/store
  std::mutex ingest_mu_;
  std::mutex handler_mu_;
  std::optional<std::uint32_t> last_turn_index_;  // guarded by handler_mu_
  empathy::SimulatedActuator actuator_;

  mutable std::mutex mu_;
  mutable std::condition_variable sessions_cv_;
  ServerStats stats_;
  std::vector<std::string> errors_;
  std::optional<SessionMetaMsg> meta_;
  std::atomic<bool> robot_connected_{false};

  std::mutex gateway_mu_;
  struct GatewayConn {
    std::shared_ptr<Socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
    std::thread thread;
  };
  std::list<GatewayConn> gateway_conns_;
  std::chrono::steady_clock::time_point epoch_;
};

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_EDGE_SERVER_HPP
