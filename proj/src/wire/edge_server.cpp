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

#include "affectlink/wire/edge_server.hpp"

#include <algorithm>
#include <fstream>
#include <iterator>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>
#include <sstream>

#include "affectlink/error.hpp"
#include "affectlink/wire/base64.hpp"

namespace affectlink::wire {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;
constexpr auto kPollSlice = std::chrono::milliseconds(100);

std::string ErrorReply(const std::string& message) {
  return json{{"type", "error"}, {"message", message}}.dump();
}

std::string ContentType(const std::filesystem::path& p) {
  const auto ext = p.extension().string();
  if (ext == ".html") return "text/html; charset=utf-8";
  if (ext == ".js" || ext == ".mjs") return "text/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".png") return "image/png";
  if (ext == ".svg") return "image/svg+xml";
  return "application/octet-stream";
}

std::string HttpResponse(int status, const std::string& reason, const std::string& type,
                         const std::string& body) {
  std::ostringstream out;
  out << "HTTP/1.1 " << status << ' ' << reason << "\r\n"
      << "Content-Type: " << type << "\r\n"
      << "Content-Length: " << body.size() << "\r\n"
      << "Access-Control-Allow-Origin: *\r\n"
      << "Access-Control-Allow-Headers: Content-Type\r\n"
      << "Connection: close\r\n\r\n"
      << body;
  return out.str();
}

bool LooksLikeHttp(const std::string& data) {
  for (const char* m : {"GET ", "POST ", "HEAD ", "OPTIONS "}) {
    const std::string method(m);
    const std::size_t n = std::min(method.size(), data.size());
    if (data.compare(0, n, method, 0, n) == 0) return true;
  }
  return false;
}

}  // namespace

struct EdgeServer::SessionState {
  Socket* socket = nullptr;
  std::mutex write_mu;
  Clock::time_point last_tx = Clock::now();

  std::mutex queue_mu;
  std::condition_variable queue_cv;
  std::deque<PendingTurn> queue;
  bool closing = false;

  void Send(const WireMessage& msg) {
    const auto bytes = Encode(msg);
    std::lock_guard lock(write_mu);
    socket->SendAll(bytes);
    last_tx = Clock::now();
  }
  Clock::time_point LastTx() {
    std::lock_guard lock(write_mu);
    return last_tx;
  }
};

EdgeServer::EdgeServer(EdgeServerConfig cfg, TurnHandler handler)
    : cfg_(std::move(cfg)),
      handler_(std::move(handler)),
      buffer_(std::make_shared<FrameRingBuffer>(cfg_.buffer_capacity)),
      epoch_(Clock::now()) {}

EdgeServer::~EdgeServer() { Stop(); }

void EdgeServer::Start() {
  if (running_.exchange(true)) return;
  try {
    robot_listener_ = Listener(cfg_.listen);
    if (cfg_.gateway) gateway_listener_ = Listener(*cfg_.gateway);
  } catch (...) {
    running_ = false;
    throw;
  }
  robot_thread_ = std::thread([this] { RobotAcceptLoop(); });
  if (gateway_listener_.valid()) gateway_thread_ = std::thread([this] { GatewayAcceptLoop(); });
  spdlog::info("edge server listening on {}:{}", cfg_.listen.host, port());
  if (gateway_listener_.valid()) spdlog::info("gateway listening on {}:{}", cfg_.gateway->host, gateway_port());
}

void EdgeServer::Stop() {
  if (!running_.exchange(false)) return;
  if (robot_thread_.joinable()) robot_thread_.join();
  if (gateway_thread_.joinable()) gateway_thread_.join();
  std::lock_guard lock(gateway_mu_);
  for (auto& c : gateway_conns_) {
    c.socket->ShutdownBoth();
    if (c.thread.joinable()) c.thread.join();
  }
  gateway_conns_.clear();
  robot_listener_.Close();
  gateway_listener_.Close();
}

ServerStats EdgeServer::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::vector<std::string> EdgeServer::error_log() const {
  std::lock_guard lock(mu_);
  return errors_;
}

std::optional<SessionMetaMsg> EdgeServer::session_meta() const {
  std::lock_guard lock(mu_);
  return meta_;
}

bool EdgeServer::WaitForSessions(std::uint64_t count, std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return sessions_cv_.wait_for(lock, timeout, [&] {
    return stats_.sessions >= count && !robot_connected_.load();
  });
}

void EdgeServer::LogError(const std::string& message) {
  spdlog::warn("{}", message);
  std::lock_guard lock(mu_);
  errors_.push_back(message);
}

void EdgeServer::Bump(std::uint64_t ServerStats::*field, std::uint64_t by) {
  std::lock_guard lock(mu_);
  stats_.*field += by;
}

std::uint64_t EdgeServer::NowUs() const {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::microseconds>(Clock::now() - epoch_).count());
}

std::shared_ptr<FrameRingBuffer> EdgeServer::CurrentBuffer() const {
  return std::atomic_load_explicit(&buffer_, std::memory_order_acquire);
}

void EdgeServer::RobotAcceptLoop() {
  while (running_) {
    std::optional<Socket> conn;
    try {
      conn = robot_listener_.Accept(kPollSlice);
    } catch (const Error& e) {
      LogError(std::string("accept failed: ") + e.what());
      continue;
    }
    if (conn) RunSession(std::move(*conn));
  }
}

void EdgeServer::RunSession(Socket socket) {
  std::atomic_store_explicit(&buffer_, std::make_shared<FrameRingBuffer>(cfg_.buffer_capacity),
                             std::memory_order_release);
  {
    std::lock_guard lock(mu_);
    meta_.reset();
  }
  robot_connected_ = true;
  spdlog::info("robot connected");

  SessionState state;
  state.socket = &socket;
  std::thread worker([this, &state] { TurnWorker(state); });

  StreamDecoder decoder;
  std::vector<std::uint8_t> chunk(1 << 16);
  auto last_rx = Clock::now();
  const auto dead_after = cfg_.heartbeat_interval * cfg_.missed_heartbeats;
  const auto slice = std::min<std::chrono::milliseconds>(
      kPollSlice, std::max(std::chrono::duration_cast<std::chrono::milliseconds>(cfg_.heartbeat_interval) / 4,
                           std::chrono::milliseconds(1)));
  bool alive = true;
  while (running_ && alive) {
    try {
      if (socket.WaitReadable(slice)) {
        const std::size_t n = socket.Recv(chunk);
        if (n == 0) break;
        last_rx = Clock::now();
        decoder.Feed(std::span<const std::uint8_t>(chunk.data(), n));
        try {
          while (auto msg = decoder.Next()) {
            if (auto* frame = std::get_if<FrameMsg>(&*msg)) {
              try {
                std::lock_guard lock(ingest_mu_);  // one producer at a time
                CurrentBuffer()->Push(std::move(*frame));
                Bump(&ServerStats::frames_received);
              } catch (const Error& e) {
                Bump(&ServerStats::frames_rejected);
                LogError(e.what());
              }
            } else if (auto* turn = std::get_if<TurnMsg>(&*msg)) {
              Bump(&ServerStats::turns_received);
              std::lock_guard lock(state.queue_mu);
              state.queue.push_back({std::move(*turn), Clock::now()});
              state.queue_cv.notify_one();
            } else if (std::holds_alternative<HeartbeatMsg>(*msg)) {
              Bump(&ServerStats::heartbeats_received);
            } else if (auto* meta = std::get_if<SessionMetaMsg>(&*msg)) {
              std::lock_guard lock(mu_);
              meta_ = *meta;
            } else {
              LogError("unexpected message type from robot");
            }
          }
        } catch (const Error& e) {
          // The byte stream cannot be resynchronized after a framing error.
          Bump(&ServerStats::decode_errors);
          LogError(std::string("decode error, closing session: ") + e.what());
          alive = false;
        }
      }
      const auto now = Clock::now();
      if (now - last_rx >= dead_after) {
        LogError("robot missed heartbeats, closing session");
        break;
      }
      if (now - state.LastTx() >= cfg_.heartbeat_interval) {
        state.Send(HeartbeatMsg{});
        Bump(&ServerStats::heartbeats_sent);
      }
    } catch (const Error& e) {
      LogError(std::string("robot link failed: ") + e.what());
      break;
    }
  }

  {
    std::lock_guard lock(state.queue_mu);
    state.closing = true;
    state.queue_cv.notify_one();
  }
  worker.join();
  socket.Close();
  spdlog::info("robot disconnected");
  {
    std::lock_guard lock(mu_);
    ++stats_.sessions;
    robot_connected_ = false;
  }
  sessions_cv_.notify_all();
}

void EdgeServer::TurnWorker(SessionState& state) {
  for (;;) {
    PendingTurn pending;
    {
      std::unique_lock lock(state.queue_mu);
      state.queue_cv.wait(lock, [&] { return state.closing || !state.queue.empty(); });
      if (state.queue.empty()) return;
      pending = std::move(state.queue.front());
      state.queue.pop_front();
    }
    ExprCmdMsg out;
    HandleTurn(pending.turn, pending.arrival, &out, nullptr);
    try {
      state.Send(out);
    } catch (const Error& e) {
      LogError(std::string("cannot deliver EXPR_CMD: ") + e.what());
    }
  }
}

HandlerResult EdgeServer::HandleTurn(const TurnMsg& turn, Clock::time_point arrival,
                                     ExprCmdMsg* wire_out, std::size_t* snapshot_size) {
  HandlerResult result;
  bool failed = false;
  {
    std::lock_guard lock(handler_mu_);
    try {
      const auto snapshot = CurrentBuffer()->Snapshot(turn.start_ts_us, turn.end_ts_us);
      if (snapshot_size != nullptr) *snapshot_size = snapshot.size();
      if (!handler_) throw Error(ErrorCode::kConfigError, "no turn handler installed");
      result = handler_(turn, snapshot);
    } catch (const std::exception& e) {
      failed = true;
      result = {};
      result.command = empathy::MapEmotion(EmotionLabel::kNeutral, turn.turn_index, turn.end_ts_us);
      result.command.fallback = true;
      LogError("turn " + std::to_string(turn.turn_index) + " handler failed: " + e.what());
    }
    last_turn_index_ = turn.turn_index;
  }
  result.command.turn_index = turn.turn_index;
  const ExprCmdMsg msg = actuator_.Execute(result.command, arrival);
  if (wire_out != nullptr) *wire_out = msg;
  std::lock_guard lock(mu_);
  ++stats_.turns_handled;
  if (failed) ++stats_.handler_errors;
  return result;
}

void EdgeServer::GatewayAcceptLoop() {
  while (running_) {
    std::optional<Socket> conn;
    try {
      conn = gateway_listener_.Accept(kPollSlice);
    } catch (const Error& e) {
      LogError(std::string("gateway accept failed: ") + e.what());
      continue;
    }
    std::lock_guard lock(gateway_mu_);
    // Reap finished connections.
    for (auto it = gateway_conns_.begin(); it != gateway_conns_.end();) {
      if (it->done->load()) {
        it->thread.join();
        it = gateway_conns_.erase(it);
      } else {
        ++it;
      }
    }
    if (!conn) continue;
    auto sock = std::make_shared<Socket>(std::move(*conn));
    auto done = std::make_shared<std::atomic<bool>>(false);
    gateway_conns_.push_back({sock, done, std::thread([this, sock, done] {
                                ServeGatewayConnection(*sock);
                                done->store(true);
                              })});
  }
}

void EdgeServer::ServeGatewayConnection(Socket& socket) {
  std::string data;
  std::vector<std::uint8_t> chunk(1 << 16);
  std::optional<bool> http;
  try {
    while (running_) {
      if (!socket.WaitReadable(kPollSlice)) continue;
      const std::size_t n = socket.Recv(chunk);
      if (n == 0) break;
      data.append(reinterpret_cast<const char*>(chunk.data()), n);
      if (!http) http = LooksLikeHttp(data);
      if (*http) {
        const auto head_end = data.find("\r\n\r\n");
        if (head_end == std::string::npos) continue;
        const std::string head = data.substr(0, head_end);
        std::size_t length = 0;
        std::istringstream lines(head);
        for (std::string line; std::getline(lines, line);) {
          std::string lower = line;
          std::transform(lower.begin(), lower.end(), lower.begin(),
                         [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
          if (lower.rfind("content-length:", 0) == 0) length = std::stoul(line.substr(15));
        }
        if (data.size() < head_end + 4 + length) continue;
        socket.SendAll(ServeHttp(head, data.substr(head_end + 4, length)));
        break;
      }
      std::size_t start = 0;
      for (std::size_t nl; (nl = data.find('\n', start)) != std::string::npos; start = nl + 1) {
        std::string line = data.substr(start, nl - start);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        socket.SendAll(HandleGatewayJson(line) + "\n");
      }
      data.erase(0, start);
    }
  } catch (const std::exception& e) {
    LogError(std::string("gateway connection failed: ") + e.what());
  }
  socket.ShutdownBoth();
}

std::string EdgeServer::ServeHttp(const std::string& head, const std::string& body) {
  std::istringstream in(head);
  std::string method, target;
  in >> method >> target;
  const auto query = target.find('?');
  const std::string path = target.substr(0, query);
  if (method == "OPTIONS") return HttpResponse(204, "No Content", "text/plain", "");
  if (method == "POST" && (path == "/turn" || path == "/frame" || path == "/status" || path == "/gateway")) {
    return HttpResponse(200, "OK", "application/json", HandleGatewayJson(body));
  }
  if (method == "GET" && path == "/status") {
    return HttpResponse(200, "OK", "application/json", HandleGatewayJson(R"({"type":"status"})"));
  }
  if ((method == "GET" || method == "HEAD") && (path == "/console" || path.rfind("/console/", 0) == 0)) {
    if (cfg_.console_dir.empty()) return HttpResponse(404, "Not Found", "text/plain", "console not installed\n");
    std::string rel = path.size() > 9 ? path.substr(9) : "";
    if (rel.empty()) rel = "index.html";
    if (rel.find("..") != std::string::npos) return HttpResponse(403, "Forbidden", "text/plain", "forbidden\n");
    const auto file = cfg_.console_dir / rel;
    std::ifstream f(file, std::ios::binary);
    if (!f) return HttpResponse(404, "Not Found", "text/plain", "not found\n");
    std::string content((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    auto resp = HttpResponse(200, "OK", ContentType(file), content);
    if (method == "HEAD") resp.resize(resp.size() - content.size());
    return resp;
  }
  return HttpResponse(404, "Not Found", "text/plain", "not found\n");
}

std::string EdgeServer::HandleGatewayJson(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    return ErrorReply(std::string("invalid json: ") + e.what());
  }
  try {
    const std::string type = j.value("type", "");
    if (type == "frame_b64") {
      const int w = j.at("width").get<int>();
      const int h = j.at("height").get<int>();
      if (w <= 0 || h <= 0 || w > 65535 || h > 65535) return ErrorReply("bad frame size");
      auto bytes = Base64Decode(j.at("data").get<std::string>());
      if (!bytes) return ErrorReply("data is not valid base64");
      const std::string format = j.value("format", "rgb");
      const std::size_t n = static_cast<std::size_t>(w) * h;
      FrameMsg f;
      f.width = static_cast<std::uint16_t>(w);
      f.height = static_cast<std::uint16_t>(h);
      if (format == "rgba") {
        if (bytes->size() != n * 4) return ErrorReply("rgba data has the wrong length");
        f.pixels.resize(n * 3);
        for (std::size_t i = 0; i < n; ++i) {
          for (int c = 0; c < 3; ++c) f.pixels[3 * i + c] = (*bytes)[4 * i + c];
        }
      } else if (format == "rgb") {
        if (bytes->size() != n * 3) return ErrorReply("rgb data has the wrong length");
        f.pixels = std::move(*bytes);
      } else {
        return ErrorReply("unknown frame format '" + format + "'");
      }
      f.timestamp_us = j.value("timestamp_us", NowUs());
      std::lock_guard lock(ingest_mu_);
      auto buffer = CurrentBuffer();
      const auto last = buffer->last_seq();
      f.seq = j.contains("seq") ? j.at("seq").get<std::uint64_t>() : (last ? *last + 1 : 0);
      const auto seq = f.seq;
      buffer->Push(std::move(f));
      Bump(&ServerStats::gateway_frames);
      return json{{"type", "frame_ack"}, {"seq", seq}, {"buffered", buffer->size()}}.dump();
    }
    if (type == "turn") {
      TurnMsg turn;
      turn.text = j.at("text").get<std::string>();
      if (turn.text.empty()) return ErrorReply("turn text is empty");
      if (j.contains("speaker") && j.at("speaker").is_string()) turn.speaker = j.at("speaker").get<std::string>();
      if (j.contains("turn_index")) {
        turn.turn_index = j.at("turn_index").get<std::uint32_t>();
      } else {
        std::lock_guard lock(handler_mu_);
        turn.turn_index = last_turn_index_ ? *last_turn_index_ + 1 : 0;
      }
      const auto window = static_cast<std::uint64_t>(
          std::chrono::duration_cast<std::chrono::microseconds>(cfg_.gateway_turn_window).count());
      turn.end_ts_us = j.value("end_ts_us", NowUs());
      turn.start_ts_us = j.value("start_ts_us", turn.end_ts_us > window ? turn.end_ts_us - window : 0);
      if (turn.start_ts_us > turn.end_ts_us) return ErrorReply("turn window is inverted");
      Bump(&ServerStats::gateway_turns);
      const auto arrival = Clock::now();
      std::size_t frames = 0;
      ExprCmdMsg msg;
      const auto result = HandleTurn(turn, arrival, &msg, &frames);
      const double latency_ms =
          std::chrono::duration<double, std::milli>(Clock::now() - arrival).count();
      json reply = {{"type", "expr"},
                    {"turn_index", turn.turn_index},
                    {"expression", std::string(EmotionName(result.command.expression))},
                    {"expression_id", EmotionId(result.command.expression)},
                    {"fallback", result.command.fallback},
                    {"latency_ms", latency_ms},
                    {"frames", frames}};
      if (result.probabilities) {
        reply["probabilities"] = *result.probabilities;
      } else {
        reply["probabilities"] = nullptr;
      }
      return reply.dump();
    }
    if (type == "status") {
      const auto s = stats();
      return json{{"type", "status"},
                  {"robot_connected", robot_connected()},
                  {"frames_received", s.frames_received},
                  {"gateway_frames", s.gateway_frames},
                  {"buffered", CurrentBuffer()->size()},
                  {"turns_handled", s.turns_handled},
                  {"handler_errors", s.handler_errors}}
          .dump();
    }
    return ErrorReply("unknown message type '" + type + "'");
  } catch (const json::exception& e) {
    return ErrorReply(std::string("bad message: ") + e.what());
  } catch (const Error& e) {
    return ErrorReply(e.what());
  }
}

}  // namespace affectlink::wire
