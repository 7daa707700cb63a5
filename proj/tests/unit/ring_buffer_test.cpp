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

#include <algorithm>
#include <atomic>
#include <deque>
#include <random>
#include <thread>

#include "affectlink/error.hpp"
#include "affectlink/wire/ring_buffer.hpp"

namespace affectlink::wire {
namespace {

FrameMsg MakeFrame(std::uint64_t seq, std::uint64_t ts) {
  FrameMsg f;
  f.seq = seq;
  f.timestamp_us = ts;
  f.width = 1;
  f.height = 1;
  f.pixels = {static_cast<std::uint8_t>(seq), 0, 0};
  return f;
}

std::vector<std::uint64_t> SeqsOf(const std::vector<FrameMsg>& frames) {
  std::vector<std::uint64_t> out;
  for (const auto& f : frames) out.push_back(f.seq);
  return out;
}

TEST(RingBuffer, KeepsTheLastCapacityFrames) {
  FrameRingBuffer ring(640);
  for (std::uint64_t s = 0; s < 1000; ++s) ring.Push(MakeFrame(s, s * 40000));
  std::vector<std::uint64_t> expected;
  for (std::uint64_t s = 360; s < 1000; ++s) expected.push_back(s);
  EXPECT_EQ(ring.Seqs(), expected);
  EXPECT_EQ(ring.size(), 640u);
  EXPECT_EQ(ring.total_pushed(), 1000u);
  EXPECT_EQ(ring.last_seq(), 999u);
}

TEST(RingBuffer, RandomPushCountsMatchListOracle) {
  std::mt19937_64 rng(640);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = std::uniform_int_distribution<std::size_t>(1, 5000)(rng);
    FrameRingBuffer ring(640);
    std::deque<std::uint64_t> oracle;
    std::uint64_t seq = std::uniform_int_distribution<std::uint64_t>(0, 1000)(rng);
    for (std::size_t i = 0; i < n; ++i) {
      seq += std::uniform_int_distribution<std::uint64_t>(1, 3)(rng);
      ring.Push(MakeFrame(seq, seq * 10));
      oracle.push_back(seq);
      if (oracle.size() > 640) oracle.pop_front();
    }
    EXPECT_EQ(ring.Seqs(), std::vector<std::uint64_t>(oracle.begin(), oracle.end())) << n;
  }
}

TEST(RingBuffer, SnapshotIsAClosedWindowSortedByTimestamp) {
  FrameRingBuffer ring(8);
  for (std::uint64_t s = 0; s < 12; ++s) ring.Push(MakeFrame(s, 100 * s));
  EXPECT_EQ(SeqsOf(ring.Snapshot(500, 700)), (std::vector<std::uint64_t>{5, 6, 7}));
  EXPECT_EQ(SeqsOf(ring.Snapshot(0, 450)), (std::vector<std::uint64_t>{4}));
  EXPECT_TRUE(ring.Snapshot(1201, 5000).empty());
  EXPECT_EQ(SeqsOf(ring.SnapshotAll()), (std::vector<std::uint64_t>{4, 5, 6, 7, 8, 9, 10, 11}));
  EXPECT_EQ(ring.latest_timestamp(), 1100u);
}

TEST(RingBuffer, FullRangeSnapshotMatchesSortedCopy) {
  FrameRingBuffer ring(640);
  std::vector<FrameMsg> pushed;
  std::mt19937_64 rng(3);
  std::uint64_t ts = 0;
  for (std::uint64_t s = 0; s < 640; ++s) {
    ts += std::uniform_int_distribution<std::uint64_t>(1, 50000)(rng);
    pushed.push_back(MakeFrame(s, ts));
    ring.Push(pushed.back());
  }
  auto oracle = pushed;
  std::sort(oracle.begin(), oracle.end(),
            [](const FrameMsg& a, const FrameMsg& b) { return a.timestamp_us < b.timestamp_us; });
  EXPECT_EQ(ring.Snapshot(0, ts), oracle);
}

TEST(RingBuffer, RejectsStaleFramesAndInvertedWindows) {
  FrameRingBuffer ring(4);
  EXPECT_FALSE(ring.last_seq().has_value());
  ring.Push(MakeFrame(5, 0));
  try {
    ring.Push(MakeFrame(5, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kStaleFrame);
  }
  EXPECT_THROW(ring.Push(MakeFrame(4, 1)), Error);
  try {
    ring.Snapshot(10, 9);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidWindow);
  }
}

TEST(RingBuffer, ConcurrentReadersSeeOnlyCompleteAscendingFrames) {
  FrameRingBuffer ring(64);
  std::atomic<bool> done{false};
  std::atomic<int> bad{0};
  std::vector<std::thread> readers;
  for (int r = 0; r < 3; ++r) {
    readers.emplace_back([&] {
      while (!done) {
        const auto snap = ring.SnapshotAll();
        if (snap.size() > 64) ++bad;
        for (std::size_t i = 0; i < snap.size(); ++i) {
          if (snap[i].pixels.size() != 3 || snap[i].pixels[0] != static_cast<std::uint8_t>(snap[i].seq)) ++bad;
          if (i > 0 && snap[i].seq <= snap[i - 1].seq) ++bad;
        }
      }
    });
  }
  for (std::uint64_t s = 0; s < 20000; ++s) ring.Push(MakeFrame(s, s));
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad.load(), 0);
  EXPECT_EQ(ring.size(), 64u);
}

}  // namespace
}  // namespace affectlink::wire
