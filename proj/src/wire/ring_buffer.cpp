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

#include "affectlink/wire/ring_buffer.hpp"

#include <algorithm>
#include <string>

#include "affectlink/error.hpp"

namespace affectlink::wire {

FrameRingBuffer::FrameRingBuffer(std::size_t capacity) : slots_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCode::kInvalidConfig, "ring buffer capacity must be positive");
  }
}

void FrameRingBuffer::Push(FrameMsg frame) {
  const std::uint64_t pushed = pushed_.load(std::memory_order_relaxed);
  if (pushed > 0 && frame.seq <= last_seq_.load(std::memory_order_relaxed)) {
    throw Error(ErrorCode::kStaleFrame,
                "frame seq " + std::to_string(frame.seq) +
                    " is not greater than " + std::to_string(last_seq_.load()));
  }
  auto ptr = std::make_shared<const FrameMsg>(std::move(frame));
  const std::uint64_t seq = ptr->seq;
  std::atomic_store_explicit(&slots_[pushed % slots_.size()], std::move(ptr),
                             std::memory_order_release);
  last_seq_.store(seq, std::memory_order_relaxed);
  pushed_.store(pushed + 1, std::memory_order_release);
}

std::vector<FrameRingBuffer::FramePtr> FrameRingBuffer::Collect() const {
  std::vector<FramePtr> out;
  out.reserve(slots_.size());
  for (const auto& slot : slots_) {
    if (auto p = std::atomic_load_explicit(&slot, std::memory_order_acquire)) {
      out.push_back(std::move(p));
    }
  }
  std::sort(out.begin(), out.end(), [](const FramePtr& a, const FramePtr& b) {
    if (a->timestamp_us != b->timestamp_us) return a->timestamp_us < b->timestamp_us;
    return a->seq < b->seq;
  });
  return out;
}

std::vector<FrameMsg> FrameRingBuffer::Snapshot(std::uint64_t t_start,
                                                std::uint64_t t_end) const {
  if (t_start > t_end) {
    throw Error(ErrorCode::kInvalidWindow,
                "window start " + std::to_string(t_start) + " is after end " +
                    std::to_string(t_end));
  }
  std::vector<FrameMsg> out;
  for (const auto& p : Collect()) {
    if (p->timestamp_us >= t_start && p->timestamp_us <= t_end) out.push_back(*p);
  }
  return out;
}

std::vector<FrameMsg> FrameRingBuffer::SnapshotAll() const {
  std::vector<FrameMsg> out;
  for (const auto& p : Collect()) out.push_back(*p);
  return out;
}

std::vector<std::uint64_t> FrameRingBuffer::Seqs() const {
  std::vector<std::uint64_t> out;
  for (const auto& p : Collect()) out.push_back(p->seq);
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t FrameRingBuffer::size() const {
  return static_cast<std::size_t>(
      std::min<std::uint64_t>(pushed_.load(std::memory_order_acquire), slots_.size()));
}

std::optional<std::uint64_t> FrameRingBuffer::latest_timestamp() const {
  const std::uint64_t pushed = pushed_.load(std::memory_order_acquire);
  if (pushed == 0) return std::nullopt;
  auto p = std::atomic_load_explicit(&slots_[(pushed - 1) % slots_.size()],
                                     std::memory_order_acquire);
  if (!p) return std::nullopt;
  return p->timestamp_us;
}

}  // namespace affectlink::wire
