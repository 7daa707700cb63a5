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

#include <gtest/gtest.h>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <thread>

#include "affectlink/error.hpp"
#include "affectlink/harness/replay.hpp"
#include "affectlink/wire/base64.hpp"
#include "affectlink/wire/edge_server.hpp"
#include "affectlink/wire/robot_simulator.hpp"

namespace affectlink::wire {
namespace {

using namespace std::chrono_literals;
using json = nlohmann::json;

// Minimal robot: raw socket plus a decoder for what the server sends back.
class RawRobot {
 public:
  explicit RawRobot(std::uint16_t port) : socket_(Socket::Connect({"127.0.0.1", port})) {}

  void Send(const WireMessage& m) { socket_.SendAll(Encode(m)); }
  void SendBytes(const std::vector<std::uint8_t>& b) { socket_.SendAll(b); }

  // Collects messages until `pred` holds or the timeout passes. Returns false
  // on timeout; `closed` reports an orderly shutdown by the server.
  template <typename Pred>
  bool ReadUntil(Pred pred, std::chrono::milliseconds timeout) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    std::vector<std::uint8_t> chunk(1 << 14);
    while (!pred()) {
      if (std::chrono::steady_clock::now() >= deadline) return false;
      if (!socket_.WaitReadable(20ms)) continue;
      const std::size_t n = socket_.Recv(chunk);
      if (n == 0) {
        closed = true;
        return pred();
      }
      decoder_.Feed(std::span<const std::uint8_t>(chunk.data(), n));
      while (auto m = decoder_.Next()) {
        if (auto* e = std::get_if<ExprCmdMsg>(&*m)) commands.push_back(*e);
        if (std::holds_alternative<HeartbeatMsg>(*m)) ++heartbeats;
      }
    }
    return true;
  }

  std::vector<ExprCmdMsg> commands;
  int heartbeats = 0;
  bool closed = false;

 private:
  Socket socket_;
  StreamDecoder decoder_;
};

FrameMsg SmallFrame(std::uint64_t seq) {
  FrameMsg f;
  f.seq = seq;
  f.timestamp_us = seq * 40000;
  f.width = 4;
  f.height = 2;
  f.pixels.assign(24, static_cast<std::uint8_t>(seq));
  return f;
}

TurnMsg Turn(std::uint32_t index, std::uint64_t start, std::uint64_t end, std::string text) {
  return TurnMsg{index, start, end, std::nullopt, std::move(text)};
}

HandlerResult Answer(EmotionLabel label, const TurnMsg& t) {
  return {empathy::MapEmotion(label, t.turn_index, t.end_ts_us), std::nullopt};
}

TEST(EdgeServer, HandlesTurnsWithTheirWindowSnapshot) {
  std::vector<std::size_t> sizes;
  EdgeServer server({}, [&](const TurnMsg& t, const std::vector<FrameMsg>& snap) {
    sizes.push_back(snap.size());
    return Answer(EmotionLabel::kJoy, t);
  });
  server.Start();
  RawRobot robot(server.port());
  robot.Send(SessionMetaMsg{"unit", 25, 4, 2});
  for (std::uint64_t s = 0; s < 10; ++s) robot.Send(SmallFrame(s));
  robot.Send(Turn(0, 0, 160000, "first"));          // frames 0..4
  robot.Send(Turn(1, 5000000, 6000000, "second"));  // no frames
  ASSERT_TRUE(robot.ReadUntil([&] { return robot.commands.size() == 2; }, 5s));
  EXPECT_EQ(sizes, (std::vector<std::size_t>{5, 0}));
  EXPECT_EQ(robot.commands[0], (ExprCmdMsg{0, 4, 0, 160000}));
  EXPECT_EQ(robot.commands[1], (ExprCmdMsg{1, 4, 0, 6000000}));
  EXPECT_EQ(server.session_meta()->session_id, "unit");
  EXPECT_EQ(server.executions().size(), 2u);
  server.Stop();
  EXPECT_EQ(server.stats().frames_received, 10u);
}

TEST(EdgeServer, HandlerFailureYieldsNeutralFallback) {
  int calls = 0;
  EdgeServer server({}, [&](const TurnMsg& t, const std::vector<FrameMsg>&) {
    if (calls++ == 0) throw std::runtime_error("model exploded");
    return Answer(EmotionLabel::kAnger, t);
  });
  server.Start();
  RawRobot robot(server.port());
  robot.Send(Turn(7, 0, 10, "a"));
  robot.Send(Turn(8, 10, 20, "b"));
  ASSERT_TRUE(robot.ReadUntil([&] { return robot.commands.size() == 2; }, 5s));
  EXPECT_EQ(robot.commands[0], (ExprCmdMsg{7, 0, ExprCmdMsg::kFlagFallback, 10}));
  EXPECT_EQ(robot.commands[1], (ExprCmdMsg{8, 6, 0, 20}));
  const auto stats = server.stats();
  EXPECT_EQ(stats.handler_errors, 1u);
  EXPECT_EQ(stats.turns_handled, 2u);
  ASSERT_FALSE(server.error_log().empty());
  EXPECT_NE(server.error_log().front().find("model exploded"), std::string::npos);
}

TEST(EdgeServer, SilentRobotIsDroppedAfterMissedHeartbeats) {
  EdgeServerConfig cfg;
  cfg.heartbeat_interval = 50ms;
  cfg.missed_heartbeats = 4;
  EdgeServer server(cfg, [](const TurnMsg& t, const std::vector<FrameMsg>&) { return Answer(EmotionLabel::kNeutral, t); });
  server.Start();
  RawRobot robot(server.port());
  EXPECT_TRUE(robot.ReadUntil([&] { return robot.closed; }, 3s));
  EXPECT_GE(robot.heartbeats, 2);
  EXPECT_TRUE(server.WaitForSessions(1, 2s));
  EXPECT_FALSE(server.robot_connected());

  // A fresh connection gets a fresh session.
  RawRobot again(server.port());
  again.Send(Turn(0, 0, 0, "hello"));
  EXPECT_TRUE(again.ReadUntil([&] { return again.commands.size() == 1; }, 2s));
}

TEST(EdgeServer, DecodeErrorClosesTheSession) {
  EdgeServer server({}, [](const TurnMsg& t, const std::vector<FrameMsg>&) { return Answer(EmotionLabel::kNeutral, t); });
  server.Start();
  RawRobot robot(server.port());
  robot.SendBytes({'N', 'O', 'P', 'E', 1, 0, 0, 0, 0});
  EXPECT_TRUE(robot.ReadUntil([&] { return robot.closed; }, 3s));
  EXPECT_TRUE(server.WaitForSessions(1, 2s));
  EXPECT_EQ(server.stats().decode_errors, 1u);
}

TEST(EdgeServer, StaleFramesAreRejectedNotFatal) {
  EdgeServer server({}, [](const TurnMsg& t, const std::vector<FrameMsg>& s) {
    return Answer(s.size() == 2 ? EmotionLabel::kJoy : EmotionLabel::kSadness, t);
  });
  server.Start();
  RawRobot robot(server.port());
  robot.Send(SmallFrame(1));
  robot.Send(SmallFrame(1));
  robot.Send(SmallFrame(2));
  robot.Send(Turn(0, 0, 1000000, "x"));
  ASSERT_TRUE(robot.ReadUntil([&] { return robot.commands.size() == 1; }, 3s));
  EXPECT_EQ(robot.commands[0].expression, 4);
  EXPECT_EQ(server.stats().frames_rejected, 1u);
}

TEST(EdgeServer, GatewayJsonFramesAndTurns) {
  EdgeServerConfig cfg;
  cfg.gateway = Endpoint{"127.0.0.1", 0};
  EdgeServer server(cfg, [](const TurnMsg& t, const std::vector<FrameMsg>& s) {
    HandlerResult r = Answer(s.empty() ? EmotionLabel::kSadness : EmotionLabel::kSurprise, t);
    r.probabilities = EmotionDistribution{0.1, 0.4, 0.1, 0.1, 0.1, 0.1, 0.1};
    return r;
  });
  server.Start();
  const std::vector<std::uint8_t> rgba(2 * 2 * 4, 200);
  auto ack = json::parse(server.HandleGatewayJson(json{{"type", "frame_b64"}, {"width", 2}, {"height", 2},
                                                       {"format", "rgba"}, {"data", Base64Encode(rgba)},
                                                       {"timestamp_us", 1000}}.dump()));
  EXPECT_EQ(ack["type"], "frame_ack");
  EXPECT_EQ(ack["seq"], 0);
  ack = json::parse(server.HandleGatewayJson(json{{"type", "frame_b64"}, {"width", 2}, {"height", 2},
                                                  {"data", Base64Encode(std::vector<std::uint8_t>(12, 1))},
                                                  {"timestamp_us", 2000}}.dump()));
  EXPECT_EQ(ack["seq"], 1);
  EXPECT_EQ(ack["buffered"], 2);

  auto expr = json::parse(server.HandleGatewayJson(
      json{{"type", "turn"}, {"text", "hi"}, {"start_ts_us", 0}, {"end_ts_us", 5000}}.dump()));
  EXPECT_EQ(expr["type"], "expr");
  EXPECT_EQ(expr["expression"], "surprise");
  EXPECT_EQ(expr["frames"], 2);
  EXPECT_EQ(expr["turn_index"], 0);
  EXPECT_EQ(expr["fallback"], false);
  EXPECT_DOUBLE_EQ(expr["probabilities"][1].get<double>(), 0.4);

  expr = json::parse(server.HandleGatewayJson(
      json{{"type", "turn"}, {"text", "again"}, {"start_ts_us", 9000}, {"end_ts_us", 9500}}.dump()));
  EXPECT_EQ(expr["turn_index"], 1);
  EXPECT_EQ(expr["expression"], "sadness");

  EXPECT_EQ(json::parse(server.HandleGatewayJson("{not json"))["type"], "error");
  EXPECT_EQ(json::parse(server.HandleGatewayJson(R"({"type":"turn","text":""})"))["type"], "error");
  EXPECT_EQ(json::parse(server.HandleGatewayJson(R"({"type":"frame_b64","width":2,"height":2,"data":"AAAA"})"))["type"], "error");
  EXPECT_EQ(json::parse(server.HandleGatewayJson(R"({"type":"dance"})"))["type"], "error");

  const auto status = json::parse(server.HandleGatewayJson(R"({"type":"status"})"));
  EXPECT_EQ(status["gateway_frames"], 2);
  EXPECT_EQ(status["turns_handled"], 2);
  EXPECT_EQ(status["robot_connected"], false);
}

std::string Exchange(std::uint16_t port, const std::string& request) {
  Socket s = Socket::Connect({"127.0.0.1", port});
  s.SendAll(request);
  std::string out;
  std::vector<std::uint8_t> chunk(4096);
  const auto deadline = std::chrono::steady_clock::now() + 3s;
  while (std::chrono::steady_clock::now() < deadline) {
    if (!s.WaitReadable(20ms)) {
      if (!out.empty() && request.rfind("{", 0) == 0 && out.back() == '\n') break;
      continue;
    }
    const std::size_t n = s.Recv(chunk);
    if (n == 0) break;
    out.append(reinterpret_cast<const char*>(chunk.data()), n);
  }
  return out;
}

TEST(EdgeServer, GatewaySpeaksNdjsonAndHttp) {
  const auto console = std::filesystem::temp_directory_path() / "affectlink_console_test";
  std::filesystem::create_directories(console);
  std::ofstream(console / "index.html") << "<html>console</html>";

  EdgeServerConfig cfg;
  cfg.gateway = Endpoint{"127.0.0.1", 0};
  cfg.console_dir = console;
  EdgeServer server(cfg, [](const TurnMsg& t, const std::vector<FrameMsg>&) { return Answer(EmotionLabel::kFear, t); });
  server.Start();

  const auto line = Exchange(server.gateway_port(), "{\"type\":\"status\"}\n");
  EXPECT_EQ(json::parse(line)["type"], "status");

  const std::string body = R"({"type":"turn","text":"boo"})";
  const auto post = Exchange(server.gateway_port(), "POST /turn HTTP/1.1\r\nHost: x\r\nContent-Length: " +
                                                        std::to_string(body.size()) + "\r\n\r\n" + body);
  ASSERT_EQ(post.rfind("HTTP/1.1 200", 0), 0u) << post;
  EXPECT_NE(post.find("\"fear\""), std::string::npos);

  EXPECT_EQ(Exchange(server.gateway_port(), "GET /status HTTP/1.1\r\n\r\n").rfind("HTTP/1.1 200", 0), 0u);
  const auto page = Exchange(server.gateway_port(), "GET /console/ HTTP/1.1\r\n\r\n");
  EXPECT_NE(page.find("<html>console</html>"), std::string::npos);
  EXPECT_EQ(Exchange(server.gateway_port(), "GET /console/missing.js HTTP/1.1\r\n\r\n").rfind("HTTP/1.1 404", 0), 0u);
  EXPECT_EQ(Exchange(server.gateway_port(), "GET /console/../x HTTP/1.1\r\n\r\n").rfind("HTTP/1.1 403", 0), 0u);
  server.Stop();
  std::filesystem::remove_all(console);

  EdgeServerConfig bare;
  bare.gateway = Endpoint{"127.0.0.1", 0};
  EdgeServer no_console(bare, nullptr);
  no_console.Start();
  EXPECT_EQ(Exchange(no_console.gateway_port(), "GET /console/ HTTP/1.1\r\n\r\n").rfind("HTTP/1.1 404", 0), 0u);
}

TEST(RobotSimulator, RefusedConnectionIsATransportFailure) {
  std::uint16_t port = 0;
  {
    Listener probe({"127.0.0.1", 0});
    port = probe.port();
  }
  harness::SessionScript empty;
  const harness::ScriptSource source(empty);
  SimulatorConfig cfg;
  cfg.target = {"127.0.0.1", port};
  try {
    RunRobotSimulator(source, cfg);
    FAIL();
  } catch (const TransportFailure& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTransportError);
    EXPECT_TRUE(e.log().partial);
  }
}

TEST(RobotSimulator, TenSecondsAtTwentyFiveFps) {
  harness::SyntheticGenConfig g;
  g.seed = 2;
  g.turns_per_dialogue = 5;
  g.frames_per_turn = 50;
  g.distractors = 2;
  const auto script = harness::GenerateSyntheticSession(g);
  ASSERT_EQ(script.frame_count, 250u);
  std::atomic<int> turns{0};
  EdgeServer server({}, [&](const TurnMsg& t, const std::vector<FrameMsg>&) {
    ++turns;
    return Answer(EmotionLabel::kJoy, t);
  });
  server.Start();
  SimulatorConfig cfg;
  cfg.target = {"127.0.0.1", server.port()};
  cfg.fps = 25;
  const harness::ScriptSource source(script);
  const auto log = RunRobotSimulator(source, cfg);
  EXPECT_GE(log.frames_sent, 248u);
  EXPECT_LE(log.frames_sent, 252u);
  EXPECT_EQ(log.frames_sent + log.frames_dropped, 250u);
  EXPECT_GE(log.duration_s, 9.9);
  EXPECT_EQ(log.decode_errors, 0u);
  ASSERT_EQ(log.commands.size(), 5u);
  for (const auto& c : log.commands) EXPECT_LT(c.latency_ms, 1000.0);
  EXPECT_TRUE(server.WaitForSessions(1, 3s));
  EXPECT_EQ(server.stats().frames_received, log.frames_sent);
  EXPECT_EQ(turns.load(), 5);
  const auto parsed = json::parse(log.ToJson());
  EXPECT_EQ(parsed["commands"].size(), 5u);
}

TEST(Endpoint, Parse) {
  const auto ep = Endpoint::Parse("10.0.0.2:7000");
  EXPECT_EQ(ep.host, "10.0.0.2");
  EXPECT_EQ(ep.port, 7000);
  EXPECT_EQ(ep.ToString(), "10.0.0.2:7000");
  EXPECT_THROW(Endpoint::Parse("nohost"), Error);
  EXPECT_THROW(Endpoint::Parse("h:99999"), Error);
}

}  // namespace
}  // namespace affectlink::wire
