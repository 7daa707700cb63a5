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

#include "affectlink/percept/face.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <tuple>

#include "affectlink/error.hpp"

namespace affectlink::percept {
namespace {

using nlohmann::json;

std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::string RoleName(FaceRole role) {
  switch (role) {
    case FaceRole::kActive: return "active";
    case FaceRole::kDistractor: return "distractor";
    case FaceRole::kUnknown: break;
  }
  return "unknown";
}

FaceRole ParseRole(const std::string& s) {
  if (s == "active") return FaceRole::kActive;
  if (s == "distractor") return FaceRole::kDistractor;
  return FaceRole::kUnknown;
}

std::vector<const FaceBox*> Eligible(const std::vector<FaceBox>& boxes, double threshold) {
  std::vector<const FaceBox*> out;
  for (const auto& b : boxes) {
    if (b.confidence >= threshold && b.w > 0 && b.h > 0) out.push_back(&b);
  }
  return out;
}

}  // namespace

FaceBox ClampToFrame(const FaceBox& box, int frame_width, int frame_height) {
  const int x0 = std::clamp(box.x, 0, frame_width);
  const int y0 = std::clamp(box.y, 0, frame_height);
  const int x1 = std::clamp(box.x + box.w, 0, frame_width);
  const int y1 = std::clamp(box.y + box.h, 0, frame_height);
  if (x1 <= x0 || y1 <= y0) {
    throw Error(ErrorCode::kDegenerateBox, "box has no area inside the frame");
  }
  FaceBox out = box;
  out.x = x0;
  out.y = y0;
  out.w = x1 - x0;
  out.h = y1 - y0;
  return out;
}

void PerceptConfig::Validate() const {
  if (crop_side < 8) throw Error(ErrorCode::kInvalidConfig, "crop side must be >= 8");
  if (max_frames < 1) throw Error(ErrorCode::kInvalidConfig, "max frames must be >= 1");
  if (!(confidence_threshold >= 0.0 && confidence_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidConfig, "confidence threshold must lie in [0, 1]");
  }
}

AnnotatedDetector AnnotatedDetector::FromJson(const std::string& json_text) {
  AnnotatedDetector det;
  try {
    const json doc = json::parse(json_text);
    for (const auto& frame : doc.at("frames")) {
      std::vector<FaceBox> boxes;
      for (const auto& b : frame.at("boxes")) {
        FaceBox box;
        box.x = b.at("x").get<int>();
        box.y = b.at("y").get<int>();
        box.w = b.at("w").get<int>();
        box.h = b.at("h").get<int>();
        box.confidence = b.value("confidence", 1.0);
        box.role = ParseRole(b.value("role", std::string("unknown")));
        boxes.push_back(box);
      }
      det.boxes_[frame.at("seq").get<std::uint64_t>()] = std::move(boxes);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kScriptError, std::string("bad annotation json: ") + e.what());
  }
  return det;
}

std::string AnnotatedDetector::ToJson() const {
  json frames = json::array();
  for (const auto& [seq, boxes] : boxes_) {
    json jb = json::array();
    for (const auto& b : boxes) {
      jb.push_back({{"x", b.x}, {"y", b.y}, {"w", b.w}, {"h", b.h},
                    {"confidence", b.confidence}, {"role", RoleName(b.role)}});
    }
    frames.push_back({{"seq", seq}, {"boxes", std::move(jb)}});
  }
  return json{{"frames", std::move(frames)}}.dump();
}

std::vector<FaceBox> AnnotatedDetector::Detect(const wire::FrameMsg& frame) const {
  auto it = boxes_.find(frame.seq);
  if (it == boxes_.end()) return {};
  std::vector<FaceBox> out;
  for (const auto& b : it->second) {
    try {
      out.push_back(ClampToFrame(b, frame.width, frame.height));
    } catch (const Error&) {
      // box entirely outside the frame
    }
  }
  return out;
}

std::vector<FaceBox> BlobDetector::Detect(const wire::FrameMsg& frame) const {
  const int w = frame.width;
  const int h = frame.height;
  if (frame.pixels.size() != frame.expected_pixel_bytes() || w == 0 || h == 0) return {};
  std::vector<std::uint8_t> fg(static_cast<std::size_t>(w) * h);
  for (std::size_t i = 0; i < fg.size(); ++i) {
    const int sum = frame.pixels[3 * i] + frame.pixels[3 * i + 1] + frame.pixels[3 * i + 2];
    fg[i] = sum > intensity_threshold_ ? 1 : 0;
  }
  std::vector<FaceBox> out;
  std::vector<int> stack;
  for (int sy = 0; sy < h; ++sy) {
    for (int sx = 0; sx < w; ++sx) {
      const std::size_t start = static_cast<std::size_t>(sy) * w + sx;
      if (fg[start] != 1) continue;
      int x0 = sx, x1 = sx, y0 = sy, y1 = sy;
      long long count = 0;
      fg[start] = 2;
      stack.assign(1, static_cast<int>(start));
      while (!stack.empty()) {
        const int p = stack.back();
        stack.pop_back();
        const int px = p % w;
        const int py = p / w;
        ++count;
        x0 = std::min(x0, px);
        x1 = std::max(x1, px);
        y0 = std::min(y0, py);
        y1 = std::max(y1, py);
        auto visit = [&](int nx, int ny) {
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) return;
          const std::size_t q = static_cast<std::size_t>(ny) * w + nx;
          if (fg[q] == 1) {
            fg[q] = 2;
            stack.push_back(static_cast<int>(q));
          }
        };
        visit(px - 1, py);
        visit(px + 1, py);
        visit(px, py - 1);
        visit(px, py + 1);
      }
      const int bw = x1 - x0 + 1;
      const int bh = y1 - y0 + 1;
      if (bw < min_side_ || bh < min_side_) continue;
      FaceBox box;
      box.x = x0;
      box.y = y0;
      box.w = bw;
      box.h = bh;
      box.confidence = static_cast<double>(count) / (static_cast<double>(bw) * bh);
      out.push_back(box);
    }
  }
  return out;
}

FaceBox SelectActiveFace(const std::vector<FaceBox>& boxes, int frame_width,
                         double confidence_threshold) {
  const auto eligible = Eligible(boxes, confidence_threshold);
  if (eligible.empty()) {
    throw Error(ErrorCode::kNoFaceFound, "no face at or above the confidence threshold");
  }
  const double center = frame_width / 2.0;
  auto key = [&](const FaceBox* b) {
    return std::make_tuple(std::abs(b->center_x() - center), -b->area(), b->y);
  };
  // Eligible preserves input order, so min_element keeps the lowest index on
  // a full tie.
  const FaceBox* best = *std::min_element(
      eligible.begin(), eligible.end(),
      [&](const FaceBox* a, const FaceBox* b) { return key(a) < key(b); });
  return *best;
}

FaceCrop CropResize(const wire::FrameMsg& frame, const FaceBox& box, int side) {
  if (side <= 0) throw Error(ErrorCode::kInvalidConfig, "crop side must be positive");
  if (frame.pixels.size() != frame.expected_pixel_bytes()) {
    throw Error(ErrorCode::kMalformedPayload, "frame pixel buffer has the wrong size");
  }
  const FaceBox b = ClampToFrame(box, frame.width, frame.height);
  FaceCrop crop;
  crop.side = side;
  crop.source_seq = frame.seq;
  crop.pixels.resize(static_cast<std::size_t>(side) * side * 3);

  const double sx = static_cast<double>(b.w) / side;
  const double sy = static_cast<double>(b.h) / side;
  auto px = [&](int x, int y, int c) -> double {
    return frame.pixels[(static_cast<std::size_t>(y) * frame.width + x) * 3 + c];
  };
  for (int oy = 0; oy < side; ++oy) {
    const double fy = std::clamp((oy + 0.5) * sy - 0.5, 0.0, static_cast<double>(b.h - 1));
    const int y0 = static_cast<int>(std::floor(fy));
    const int y1 = std::min(y0 + 1, b.h - 1);
    const double wy = fy - y0;
    for (int ox = 0; ox < side; ++ox) {
      const double fx = std::clamp((ox + 0.5) * sx - 0.5, 0.0, static_cast<double>(b.w - 1));
      const int x0 = static_cast<int>(std::floor(fx));
      const int x1 = std::min(x0 + 1, b.w - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1 - wx) * px(b.x + x0, b.y + y0, c) + wx * px(b.x + x1, b.y + y0, c);
        const double bot = (1 - wx) * px(b.x + x0, b.y + y1, c) + wx * px(b.x + x1, b.y + y1, c);
        const double v = ((1 - wy) * top + wy * bot) / 255.0;
        crop.pixels[(static_cast<std::size_t>(oy) * side + ox) * 3 + c] = std::clamp(v, 0.0, 1.0);
      }
    }
  }
  return crop;
}

DeltaSequence NeutralNormalize(const std::vector<FaceCrop>& crops,
                               const std::optional<FaceCrop>& neutral) {
  if (crops.empty()) throw Error(ErrorCode::kInvalidConfig, "no crops to normalize");
  const int side = crops.front().side;
  const std::size_t n = static_cast<std::size_t>(side) * side * 3;
  for (const auto& c : crops) {
    if (c.side != side || c.pixels.size() != n) {
      throw Error(ErrorCode::kSizeMismatch, "crops differ in size");
    }
  }
  if (neutral && (neutral->side != side || neutral->pixels.size() != n)) {
    throw Error(ErrorCode::kSizeMismatch, "neutral face differs in size from the crops");
  }
  const FaceCrop& ref = neutral ? *neutral : crops.front();

  DeltaSequence out;
  out.side = side;
  out.neutral_used = neutral ? NeutralSource::kProvided : NeutralSource::kFirstFrame;
  out.frames.reserve(crops.size());
  for (const auto& c : crops) {
    std::vector<double> delta(n);
    for (std::size_t i = 0; i < n; ++i) {
      delta[i] = std::clamp(c.pixels[i] - ref.pixels[i], -1.0, 1.0);
    }
    out.frames.push_back(std::move(delta));
    out.source_seqs.push_back(c.source_seq);
  }
  return out;
}

std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t max_frames) {
  std::vector<std::size_t> out;
  if (n == 0 || max_frames == 0) return out;
  if (n <= max_frames) {
    for (std::size_t i = 0; i < n; ++i) out.push_back(i);
    return out;
  }
  if (max_frames == 1) return {0};
  const std::size_t num = n - 1;
  const std::size_t den = max_frames - 1;
  for (std::size_t i = 0; i < max_frames; ++i) {
    // round half up of i * num / den in integer arithmetic
    const std::size_t idx = (2 * i * num + den) / (2 * den);
    if (out.empty() || out.back() != idx) out.push_back(idx);
  }
  return out;
}

std::vector<wire::FrameMsg> SampleUtteranceFrames(const std::vector<wire::FrameMsg>& snapshot,
                                                  std::size_t max_frames) {
  std::vector<wire::FrameMsg> out;
  for (std::size_t i : SampleIndices(snapshot.size(), max_frames)) out.push_back(snapshot[i]);
  return out;
}

std::optional<DeltaSequence> ExtractFaceSequence(const std::vector<wire::FrameMsg>& snapshot,
                                                 const FaceDetector& detector,
                                                 const PerceptConfig& cfg,
                                                 const ExtractOptions& options,
                                                 ExtractionTrace* trace) {
  cfg.Validate();
  std::vector<FaceCrop> crops;
  std::vector<FaceBox> chosen;
  for (std::size_t i : SampleIndices(snapshot.size(), static_cast<std::size_t>(cfg.max_frames))) {
    const auto& frame = snapshot[i];
    const auto boxes = detector.Detect(frame);
    if (trace != nullptr) {
      trace->seqs.push_back(frame.seq);
      trace->detections.push_back(boxes);
      trace->chosen.emplace_back();
    }
    FaceBox box;
    try {
      if (options.selection == SelectionPolicy::kCentered) {
        box = SelectActiveFace(boxes, frame.width, cfg.confidence_threshold);
      } else {
        const auto eligible = Eligible(boxes, cfg.confidence_threshold);
        if (eligible.empty()) continue;
        const std::uint64_t r = SplitMix64(options.random_seed ^ SplitMix64(frame.seq));
        box = *eligible[r % eligible.size()];
      }
      crops.push_back(CropResize(frame, box, cfg.crop_side));
      chosen.push_back(box);
      if (trace != nullptr) trace->chosen.back() = box;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoFaceFound && e.code() != ErrorCode::kDegenerateBox) throw;
    }
  }
  if (crops.empty()) return std::nullopt;

  std::optional<FaceCrop> neutral;
  if (!options.neutral_normalization) {
    FaceCrop zero;
    zero.side = cfg.crop_side;
    zero.pixels.assign(crops.front().pixels.size(), 0.0);
    neutral = std::move(zero);
  }
  DeltaSequence seq = NeutralNormalize(crops, neutral);
  if (!options.neutral_normalization) seq.neutral_used = NeutralSource::kNone;
  seq.source_boxes = std::move(chosen);
  return seq;
}

}  // namespace affectlink::percept
