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

#ifndef AFFECTLINK_WIRE_RING_BUFFER_HPP
#define AFFECTLINK_WIRE_RING_BUFFER_HPP

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "affectlink/wire/protocol.hpp"

namespace affectlink::wire {

inline constexpr std::size_t kDefaultRingCapacity = 640;

// Fixed-capacity store of the most recent frames.
//
// Single producer (the network reader), any number of concurrent readers.
// Each slot holds an immutable shared frame that is swapped in atomically, so
// Push never waits for a reader to finish copying and a snapshot can only
// observe complete frames.
class FrameRingBuffer {
 public:
  explicit FrameRingBuffer(std::size_t capacity = kDefaultRingCapacity);

  FrameRingBuffer(const FrameRingBuffer&) = delete;
  FrameRingBuffer& operator=(const FrameRingBuffer&) = delete;

  // Throws Error{kStaleFrame} unless frame.seq exceeds every stored seq.
  void Push(FrameMsg frame);

  // Copies of buffered frames with t_start <= timestamp_us <= t_end, sorted
  // by timestamp. Throws Error{kInvalidWindow} when t_start > t_end.
  std::vector<FrameMsg> Snapshot(std::uint64_t t_start, std::uint64_t t_end) const;

  // Every buffered frame, sorted by timestamp.
  std::vector<FrameMsg> SnapshotAll() const;

  // Seqs currently retrievable, ascending.
  std::vector<std::uint64_t> Seqs() const;

  std::size_t capacity() const { return slots_.size(); }
  std::size_t size() const;
  std::uint64_t total_pushed() const {
    return pushed_.load(std::memory_order_acquire);
  }
  // Seq of the newest frame, if any.
  std::optional<std::uint64_t> last_seq() const {
    if (pushed_.load(std::memory_order_acquire) == 0) return std::nullopt;
    return last_seq_.load(std::memory_order_relaxed);
  }
  // Timestamp of the newest frame, if any.
  std::optional<std::uint64_t> latest_timestamp() const;

 private:
  using FramePtr = std::shared_ptr<const FrameMsg>;

  std::vector<FramePtr> Collect() const;

  std::vector<FramePtr> slots_;
  std::atomic<std::uint64_t> pushed_{0};
  std::atomic<std::uint64_t> last_seq_{0};
};

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_RING_BUFFER_HPP
