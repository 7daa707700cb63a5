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

#ifndef AFFECTLINK_WIRE_SOCKET_HPP
#define AFFECTLINK_WIRE_SOCKET_HPP

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>

namespace affectlink::wire {

struct Endpoint {
  std::string host = "127.0.0.1";
  std::uint16_t port = 0;

  // "HOST:PORT"; throws Error{kInvalidConfig} otherwise.
  static Endpoint Parse(const std::string& text);
  std::string ToString() const { return host + ":" + std::to_string(port); }
};

// Owning TCP socket. All failures throw Error{kTransportError}.
class Socket {
 public:
  Socket() = default;
  explicit Socket(int fd) : fd_(fd) {}
  ~Socket();
  Socket(Socket&& other) noexcept;
  Socket& operator=(Socket&& other) noexcept;
  Socket(const Socket&) = delete;
  Socket& operator=(const Socket&) = delete;

  static Socket Connect(const Endpoint& ep);

  bool valid() const { return fd_ >= 0; }
  int fd() const { return fd_; }

  void SendAll(std::span<const std::uint8_t> bytes);
  void SendAll(const std::string& text);
  // 0 means the peer closed the connection.
  std::size_t Recv(std::span<std::uint8_t> buffer);
  // Waits up to `timeout` for readability (or writability).
  bool WaitReadable(std::chrono::milliseconds timeout) const;
  bool WaitWritable(std::chrono::milliseconds timeout) const;
  void ShutdownBoth();
  void Close();

 private:
  int fd_ = -1;
};

class Listener {
 public:
  Listener() = default;
  // Port 0 binds an ephemeral port; see port().
  explicit Listener(const Endpoint& ep);
  ~Listener();
  Listener(Listener&& other) noexcept;
  Listener& operator=(Listener&& other) noexcept;

  std::uint16_t port() const { return port_; }
  bool valid() const { return fd_ >= 0; }
  // std::nullopt on timeout.
  std::optional<Socket> Accept(std::chrono::milliseconds timeout);
  void Close();

 private:
  int fd_ = -1;
  std::uint16_t port_ = 0;
};

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_SOCKET_HPP
