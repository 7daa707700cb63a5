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

#include "affectlink/wire/protocol.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "affectlink/empathy/emotion.hpp"
#include "affectlink/error.hpp"

namespace affectlink::wire {
namespace {

class Writer {
 public:
  explicit Writer(std::vector<std::uint8_t>& out) : out_(out) {}

  void U8(std::uint8_t v) { out_.push_back(v); }
  void U16(std::uint16_t v) { BigEndian(v, 2); }
  void U32(std::uint32_t v) { BigEndian(v, 4); }
  void U64(std::uint64_t v) { BigEndian(v, 8); }
  void Bytes(std::span<const std::uint8_t> b) {
    out_.insert(out_.end(), b.begin(), b.end());
  }
  void Str(const std::string& s) {
    out_.insert(out_.end(), s.begin(), s.end());
  }

 private:
  void BigEndian(std::uint64_t v, int width) {
    for (int i = width - 1; i >= 0; --i) {
      out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
  }
  std::vector<std::uint8_t>& out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t U8() { return static_cast<std::uint8_t>(BigEndian(1)); }
  std::uint16_t U16() { return static_cast<std::uint16_t>(BigEndian(2)); }
  std::uint32_t U32() { return static_cast<std::uint32_t>(BigEndian(4)); }
  std::uint64_t U64() { return BigEndian(8); }
  std::span<const std::uint8_t> Bytes(std::size_t n) {
    Need(n);
    auto s = in_.subspan(pos_, n);
    pos_ += n;
    return s;
  }
  std::string Str(std::size_t n) {
    auto b = Bytes(n);
    return std::string(b.begin(), b.end());
  }
  void ExpectEnd() const {
    if (pos_ != in_.size()) {
      throw Error(ErrorCode::kMalformedPayload,
                  "payload has " + std::to_string(in_.size() - pos_) +
                      " trailing bytes");
    }
  }

 private:
  void Need(std::size_t n) const {
    if (in_.size() - pos_ < n) {
      throw Error(ErrorCode::kMalformedPayload,
                  "payload shorter than its variant fields");
    }
  }
  std::uint64_t BigEndian(int width) {
    Need(static_cast<std::size_t>(width));
    std::uint64_t v = 0;
    for (int i = 0; i < width; ++i) v = (v << 8) | in_[pos_ + i];
    pos_ += static_cast<std::size_t>(width);
    return v;
  }

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::uint64_t PayloadSize(const WireMessage& msg) {
  struct Visitor {
    std::uint64_t operator()(const FrameMsg& m) const {
      return 20 + m.pixels.size();
    }
    std::uint64_t operator()(const TurnMsg& m) const {
      return 4 + 8 + 8 + 2 + m.speaker.value_or("").size() + 4 + m.text.size();
    }
    std::uint64_t operator()(const ExprCmdMsg&) const { return 14; }
    std::uint64_t operator()(const HeartbeatMsg&) const { return 0; }
    std::uint64_t operator()(const SessionMetaMsg& m) const {
      return 2 + m.session_id.size() + 6;
    }
  };
  return std::visit(Visitor{}, msg);
}

void WritePayload(const WireMessage& msg, Writer& w) {
  struct Visitor {
    Writer& w;
    void operator()(const FrameMsg& m) const {
      w.U64(m.seq);
      w.U64(m.timestamp_us);
      w.U16(m.width);
      w.U16(m.height);
      w.Bytes(m.pixels);
    }
    void operator()(const TurnMsg& m) const {
      w.U32(m.turn_index);
      w.U64(m.start_ts_us);
      w.U64(m.end_ts_us);
      const std::string speaker = m.speaker.value_or("");
      w.U16(static_cast<std::uint16_t>(speaker.size()));
      w.Str(speaker);
      w.U32(static_cast<std::uint32_t>(m.text.size()));
      w.Str(m.text);
    }
    void operator()(const ExprCmdMsg& m) const {
      w.U32(m.turn_index);
      w.U8(m.expression);
      w.U8(m.flags);
      w.U64(m.issue_ts_us);
    }
    void operator()(const HeartbeatMsg&) const {}
    void operator()(const SessionMetaMsg& m) const {
      w.U16(static_cast<std::uint16_t>(m.session_id.size()));
      w.Str(m.session_id);
      w.U16(m.fps);
      w.U16(m.width);
      w.U16(m.height);
    }
  };
  std::visit(Visitor{w}, msg);
}

WireMessage ReadPayload(MessageType type, std::span<const std::uint8_t> payload) {
  Reader r(payload);
  WireMessage out;
  switch (type) {
    case MessageType::kFrame: {
      FrameMsg m;
      m.seq = r.U64();
      m.timestamp_us = r.U64();
      m.width = r.U16();
      m.height = r.U16();
      auto px = r.Bytes(m.expected_pixel_bytes());
      m.pixels.assign(px.begin(), px.end());
      out = std::move(m);
      break;
    }
    case MessageType::kTurn: {
      TurnMsg m;
      m.turn_index = r.U32();
      m.start_ts_us = r.U64();
      m.end_ts_us = r.U64();
      const std::uint16_t speaker_len = r.U16();
      if (speaker_len > 0) m.speaker = r.Str(speaker_len);
      const std::uint32_t text_len = r.U32();
      m.text = r.Str(text_len);
      out = std::move(m);
      break;
    }
    case MessageType::kExprCmd: {
      ExprCmdMsg m;
      m.turn_index = r.U32();
      m.expression = r.U8();
      m.flags = r.U8();
      m.issue_ts_us = r.U64();
      out = m;
      break;
    }
    case MessageType::kHeartbeat:
      out = HeartbeatMsg{};
      break;
    case MessageType::kSessionMeta: {
      SessionMetaMsg m;
      const std::uint16_t id_len = r.U16();
      m.session_id = r.Str(id_len);
      m.fps = r.U16();
      m.width = r.U16();
      m.height = r.U16();
      out = std::move(m);
      break;
    }
  }
  r.ExpectEnd();
  Validate(out);
  return out;
}

bool IsKnownType(std::uint8_t tag) { return tag >= 0x01 && tag <= 0x05; }

}  // namespace

MessageType TypeOf(const WireMessage& msg) {
  return static_cast<MessageType>(msg.index() + 1);
}

void Validate(const WireMessage& msg) {
  auto fail = [](const std::string& why) {
    throw Error(ErrorCode::kMalformedPayload, why);
  };
  if (const auto* f = std::get_if<FrameMsg>(&msg)) {
    if (f->pixels.size() != f->expected_pixel_bytes()) {
      fail("frame pixel buffer is " + std::to_string(f->pixels.size()) +
           " bytes, expected " + std::to_string(f->expected_pixel_bytes()));
    }
  } else if (const auto* t = std::get_if<TurnMsg>(&msg)) {
    if (t->text.empty()) fail("turn text is empty");
    if (t->start_ts_us > t->end_ts_us) fail("turn window is inverted");
    if (t->speaker && t->speaker->size() > std::numeric_limits<std::uint16_t>::max()) {
      fail("speaker name exceeds 65535 bytes");
    }
    if (t->text.size() > std::numeric_limits<std::uint32_t>::max()) {
      fail("turn text exceeds 2^32-1 bytes");
    }
  } else if (const auto* e = std::get_if<ExprCmdMsg>(&msg)) {
    if (!IsValidEmotionId(e->expression)) {
      fail("expression id " + std::to_string(e->expression) + " out of range");
    }
  } else if (const auto* s = std::get_if<SessionMetaMsg>(&msg)) {
    if (s->session_id.size() > std::numeric_limits<std::uint16_t>::max()) {
      fail("session id exceeds 65535 bytes");
    }
  }
}

void CheckPayloadSize(std::uint64_t payload_bytes) {
  if (payload_bytes > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kOversizeMessage,
                "payload of " + std::to_string(payload_bytes) +
                    " bytes exceeds the 32-bit length field");
  }
}

void EncodeInto(const WireMessage& msg, std::vector<std::uint8_t>& out) {
  const std::uint64_t payload = PayloadSize(msg);
  CheckPayloadSize(payload);
  Validate(msg);
  out.reserve(out.size() + kHeaderSize + payload);
  Writer w(out);
  w.Bytes(kMagic);
  w.U8(static_cast<std::uint8_t>(TypeOf(msg)));
  w.U32(static_cast<std::uint32_t>(payload));
  WritePayload(msg, w);
}

std::vector<std::uint8_t> Encode(const WireMessage& msg) {
  std::vector<std::uint8_t> out;
  EncodeInto(msg, out);
  return out;
}

std::optional<Decoded> Decode(std::span<const std::uint8_t> bytes) {
  // Reject a bad magic as soon as the available prefix disagrees with it.
  const std::size_t magic_avail = std::min<std::size_t>(bytes.size(), 4);
  if (!std::equal(bytes.begin(), bytes.begin() + magic_avail, kMagic)) {
    throw Error(ErrorCode::kBadMagic, "stream does not start with UGM1");
  }
  if (bytes.size() < 5) return std::nullopt;
  const std::uint8_t tag = bytes[4];
  if (!IsKnownType(tag)) {
    throw Error(ErrorCode::kUnknownVariant,
                "unknown message tag " + std::to_string(tag));
  }
  if (bytes.size() < kHeaderSize) return std::nullopt;
  std::uint32_t payload_len = 0;
  for (int i = 5; i < 9; ++i) payload_len = (payload_len << 8) | bytes[i];
  if (bytes.size() - kHeaderSize < payload_len) return std::nullopt;
  auto payload = bytes.subspan(kHeaderSize, payload_len);
  return Decoded{ReadPayload(static_cast<MessageType>(tag), payload),
                 kHeaderSize + payload_len};
}

void StreamDecoder::Feed(std::span<const std::uint8_t> chunk) {
  if (offset_ > 0 && offset_ >= buffer_.size() / 2) {
    buffer_.erase(buffer_.begin(), buffer_.begin() + static_cast<std::ptrdiff_t>(offset_));
    offset_ = 0;
  }
  buffer_.insert(buffer_.end(), chunk.begin(), chunk.end());
}

std::optional<WireMessage> StreamDecoder::Next() {
  auto view = std::span<const std::uint8_t>(buffer_).subspan(offset_);
  auto decoded = Decode(view);
  if (!decoded) return std::nullopt;
  offset_ += decoded->consumed;
  return std::move(decoded->message);
}

}  // namespace affectlink::wire
