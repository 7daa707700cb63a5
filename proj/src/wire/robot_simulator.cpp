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

#include "affectlink/wire/robot_simulator.hpp"

#include <atomic>
#include <map>
#include <mutex>
#include <nlohmann/json.hpp>
#include <thread>

#include "affectlink/empathy/emotion.hpp"

namespace affectlink::wire {
namespace {

using Clock = std::chrono::steady_clock;

}  // namespace

std::vector<std::uint8_t> SessionLog::ExprBytes() const {
  std::vector<std::uint8_t> out;
  for (const auto& c : commands) EncodeInto(WireMessage{c.command}, out);
  return out;
}

std::string SessionLog::ToJson() const {
  nlohmann::json cmds = nlohmann::json::array();
  for (const auto& c : commands) {
    const int id = c.command.expression;
    cmds.push_back({{"turn_index", c.command.turn_index},
                    {"expression", IsValidEmotionId(id) ? std::string(EmotionName(EmotionFromId(id))) : "invalid"},
                    {"expression_id", id},
                    {"fallback", (c.command.flags & ExprCmdMsg::kFlagFallback) != 0},
                    {"issue_ts_us", c.command.issue_ts_us},
                    {"arrival_us", c.arrival_us},
                    {"latency_ms", c.latency_ms}});
  }
  const nlohmann::json j = {{"session_id", session_id},
                            {"commands", std::move(cmds)},
                            {"frames_sent", frames_sent},
                            {"frames_dropped", frames_dropped},
                            {"turns_sent", turns_sent},
                            {"heartbeats_sent", heartbeats_sent},
                            {"heartbeats_received", heartbeats_received},
                            {"decode_errors", decode_errors},
                            {"duration_s", duration_s},
                            {"partial", partial},
                            {"error", error}};
  return j.dump(2);
}

SessionLog RunRobotSimulator(const SimulatorSource& source, const SimulatorConfig& cfg) {
  if (!(cfg.fps > 0.0)) throw Error(ErrorCode::kInvalidConfig, "fps must be positive");
  SessionLog log;
  const auto meta = source.Meta();
  log.session_id = meta.session_id;

  Socket socket;
  try {
    socket = Socket::Connect(cfg.target);
  } catch (const Error& e) {
    log.partial = true;
    log.error = e.what();
    throw TransportFailure(e.what(), log);
  }

  const auto start = Clock::now();
  std::mutex mu;  // guards log.commands, sent_at, counters written by the reader
  std::map<std::uint32_t, Clock::time_point> sent_at;
  std::atomic<Clock::rep> last_rx{start.time_since_epoch().count()};
  std::atomic<bool> lost{false};
  std::atomic<bool> stop{false};
  std::string reader_error;

  std::thread reader([&] {
    StreamDecoder decoder;
    std::vector<std::uint8_t> chunk(1 << 14);
    try {
      while (!stop) {
        if (!socket.WaitReadable(std::chrono::milliseconds(50))) continue;
        const std::size_t n = socket.Recv(chunk);
        if (n == 0) {
          if (!stop) {
            std::lock_guard lock(mu);
            reader_error = "server closed the connection";
            lost = true;
          }
          return;
        }
        const auto now = Clock::now();
        last_rx = now.time_since_epoch().count();
        decoder.Feed(std::span<const std::uint8_t>(chunk.data(), n));
        while (auto msg = decoder.Next()) {
          std::lock_guard lock(mu);
          if (auto* cmd = std::get_if<ExprCmdMsg>(&*msg)) {
            ReceivedCommand rc;
            rc.command = *cmd;
            rc.arrival_us = static_cast<std::uint64_t>(
                std::chrono::duration_cast<std::chrono::microseconds>(now - start).count());
            if (auto it = sent_at.find(cmd->turn_index); it != sent_at.end()) {
              rc.latency_ms = std::chrono::duration<double, std::milli>(now - it->second).count();
            }
            log.commands.push_back(rc);
          } else if (std::holds_alternative<HeartbeatMsg>(*msg)) {
            ++log.heartbeats_received;
          }
        }
      }
    } catch (const Error& e) {
      std::lock_guard lock(mu);
      if (e.code() != ErrorCode::kTransportError) ++log.decode_errors;
      reader_error = e.what();
      lost = true;
    }
  });

  auto fail = [&](const std::string& what) -> TransportFailure {
    stop = true;
    socket.ShutdownBoth();
    reader.join();
    std::lock_guard lock(mu);
    log.partial = true;
    log.error = reader_error.empty() ? what : reader_error;
    log.duration_s = std::chrono::duration<double>(Clock::now() - start).count();
    return TransportFailure(log.error, log);
  };

  auto last_tx = Clock::now();
  auto send = [&](const WireMessage& msg) {
    socket.SendAll(Encode(msg));
    last_tx = Clock::now();
  };
  const auto dead_after = cfg.heartbeat_interval * cfg.missed_heartbeats;
  auto check_peer = [&] {
    if (lost) throw Error(ErrorCode::kTransportError, "connection lost");
    const auto rx = Clock::time_point(Clock::duration(last_rx.load()));
    if (Clock::now() - rx >= dead_after) throw Error(ErrorCode::kTransportError, "server missed heartbeats");
  };

  const auto turns = source.Turns();
  std::size_t next_turn = 0;
  auto send_turn = [&](const TurnMsg& t) {
    {
      std::lock_guard lock(mu);
      sent_at[t.turn_index] = Clock::now();
    }
    send(WireMessage{t});
    ++log.turns_sent;
  };

  try {
    send(WireMessage{meta});
    const auto period = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / cfg.fps));
    const std::uint64_t frames = source.FrameCount();
    for (std::uint64_t i = 0; i < frames; ++i) {
      std::this_thread::sleep_until(start + period * static_cast<Clock::rep>(i));
      check_peer();
      if (cfg.drop_on_backpressure && !socket.WaitWritable(std::chrono::milliseconds(0))) {
        ++log.frames_dropped;
      } else {
        send(WireMessage{source.Frame(i)});
        ++log.frames_sent;
      }
      while (next_turn < turns.size() && turns[next_turn].after_frame <= i) {
        send_turn(turns[next_turn++].turn);
      }
    }
    while (next_turn < turns.size()) send_turn(turns[next_turn++].turn);

    const auto deadline = Clock::now() + cfg.response_timeout;
    for (;;) {
      {
        std::lock_guard lock(mu);
        if (log.commands.size() >= log.turns_sent) break;
      }
      check_peer();
      if (Clock::now() >= deadline) throw Error(ErrorCode::kTransportError, "timed out waiting for EXPR_CMD");
      if (Clock::now() - last_tx >= cfg.heartbeat_interval) {
        send(WireMessage{HeartbeatMsg{}});
        ++log.heartbeats_sent;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(5));
    }
  } catch (const Error& e) {
    throw fail(e.what());
  }

  stop = true;
  socket.ShutdownBoth();
  reader.join();
  log.duration_s = std::chrono::duration<double>(Clock::now() - start).count();
  return log;
}

}  // namespace affectlink::wire
