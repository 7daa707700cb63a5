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

#ifndef AFFECTLINK_TESTS_RANDOM_WIRE_HPP
#define AFFECTLINK_TESTS_RANDOM_WIRE_HPP

#include <cstdint>
#include <random>
#include <string>

#include "affectlink/wire/protocol.hpp"

namespace affectlink::testing {

// Seeded generator of valid wire messages covering every variant.
class RandomWire {
 public:
  explicit RandomWire(std::uint64_t seed) : rng_(seed) {}

  wire::WireMessage Next() {
    switch (Int(0, 4)) {
      case 0: {
        wire::FrameMsg f;
        f.seq = rng_();
        f.timestamp_us = rng_();
        f.width = static_cast<std::uint16_t>(Int(0, 12));
        f.height = static_cast<std::uint16_t>(Int(0, 12));
        f.pixels.resize(f.expected_pixel_bytes());
        for (auto& p : f.pixels) p = static_cast<std::uint8_t>(Int(0, 255));
        return f;
      }
      case 1: {
        wire::TurnMsg t;
        t.turn_index = static_cast<std::uint32_t>(rng_());
        t.start_ts_us = rng_() >> 1;
        t.end_ts_us = t.start_ts_us + (rng_() >> 2);
        if (Int(0, 1) == 1) t.speaker = Text(1, 12);
        t.text = Text(1, 64);
        return t;
      }
      case 2: {
        wire::ExprCmdMsg e;
        e.turn_index = static_cast<std::uint32_t>(rng_());
        e.expression = static_cast<std::uint8_t>(Int(0, 6));
        e.flags = static_cast<std::uint8_t>(Int(0, 1));
        e.issue_ts_us = rng_();
        return e;
      }
      case 3:
        return wire::HeartbeatMsg{};
      default: {
        wire::SessionMetaMsg m;
        m.session_id = Text(0, 24);
        m.fps = static_cast<std::uint16_t>(Int(1, 120));
        m.width = static_cast<std::uint16_t>(Int(0, 65535));
        m.height = static_cast<std::uint16_t>(Int(0, 65535));
        return m;
      }
    }
  }

  int Int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::mt19937_64& engine() { return rng_; }

 private:
  std::string Text(int min_len, int max_len) {
    std::string s(static_cast<std::size_t>(Int(min_len, max_len)), ' ');
    for (auto& c : s) c = static_cast<char>(Int(1, 255));
    return s;
  }

  std::mt19937_64 rng_;
};

}  // namespace affectlink::testing

#endif  // AFFECTLINK_TESTS_RANDOM_WIRE_HPP
