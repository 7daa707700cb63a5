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

#ifndef AFFECTLINK_WIRE_PROTOCOL_HPP
#define AFFECTLINK_WIRE_PROTOCOL_HPP

// Binary framing shared by the robot simulator and the edge server.
//
//   "UGM1" | tag (u8) | payload_len (u32, big-endian) | payload
//
// Payload layouts (all integers big-endian):
//   FRAME        seq u64 | timestamp_us u64 | width u16 | height u16 | RGB8
//   TURN         turn_index u32 | start_ts_us u64 | end_ts_us u64 |
//                speaker_len u16 | speaker | text_len u32 | text
//   EXPR_CMD     turn_index u32 | expression u8 | flags u8 | issue_ts_us u64
//   HEARTBEAT    (empty)
//   SESSION_META session_id_len u16 | session_id | fps u16 | width u16 |
//                height u16

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

namespace affectlink::wire {

inline constexpr std::size_t kHeaderSize = 9;
inline constexpr std::uint8_t kMagic[4] = {'U', 'G', 'M', '1'};

enum class MessageType : std::uint8_t {
  kFrame = 0x01,
  kTurn = 0x02,
  kExprCmd = 0x03,
  kHeartbeat = 0x04,
  kSessionMeta = 0x05,
};

struct FrameMsg {
  std::uint64_t seq = 0;
  std::uint64_t timestamp_us = 0;
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<std::uint8_t> pixels;  // RGB8, row-major, width * height * 3

  std::size_t expected_pixel_bytes() const {
    return std::size_t{width} * height * 3;
  }
  friend bool operator==(const FrameMsg&, const FrameMsg&) = default;
};

struct TurnMsg {
  std::uint32_t turn_index = 0;
  std::uint64_t start_ts_us = 0;
  std::uint64_t end_ts_us = 0;
  std::optional<std::string> speaker;  // an empty name is sent as absent
  std::string text;

  friend bool operator==(const TurnMsg&, const TurnMsg&) = default;
};

struct ExprCmdMsg {
  static constexpr std::uint8_t kFlagFallback = 0x01;

  std::uint32_t turn_index = 0;
  std::uint8_t expression = 0;
  std::uint8_t flags = 0;
  std::uint64_t issue_ts_us = 0;

  bool fallback() const { return (flags & kFlagFallback) != 0; }
  friend bool operator==(const ExprCmdMsg&, const ExprCmdMsg&) = default;
};

struct HeartbeatMsg {
  friend bool operator==(const HeartbeatMsg&, const HeartbeatMsg&) = default;
};

struct SessionMetaMsg {
  std::string session_id;
  std::uint16_t fps = 25;
  std::uint16_t width = 0;
  std::uint16_t height = 0;

  friend bool operator==(const SessionMetaMsg&, const SessionMetaMsg&) = default;
};

using WireMessage =
    std::variant<FrameMsg, TurnMsg, ExprCmdMsg, HeartbeatMsg, SessionMetaMsg>;

MessageType TypeOf(const WireMessage& msg);

// Throws Error{kMalformedPayload} when a variant invariant is violated
// (pixel count, empty turn text, inverted turn window, bad expression id,
// string too long for its length prefix).
void Validate(const WireMessage& msg);

// Throws Error{kOversizeMessage} when the payload cannot be described by the
// 32-bit length field.
void CheckPayloadSize(std::uint64_t payload_bytes);

std::vector<std::uint8_t> Encode(const WireMessage& msg);

// Appends the encoding of `msg` to `out`.
void EncodeInto(const WireMessage& msg, std::vector<std::uint8_t>& out);

struct Decoded {
  WireMessage message;
  std::size_t consumed = 0;
};

// Returns std::nullopt (NeedMoreData) when `bytes` holds only a prefix of a
// message. Throws Error with kBadMagic, kUnknownVariant or kMalformedPayload.
std::optional<Decoded> Decode(std::span<const std::uint8_t> bytes);

// Incremental decoder over a byte stream delivered in arbitrary chunks.
class StreamDecoder {
 public:
  void Feed(std::span<const std::uint8_t> chunk);
  // Next complete message, or std::nullopt when more bytes are needed.
  std::optional<WireMessage> Next();
  std::size_t buffered() const { return buffer_.size() - offset_; }

 private:
  std::vector<std::uint8_t> buffer_;
  std::size_t offset_ = 0;
};

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_PROTOCOL_HPP
