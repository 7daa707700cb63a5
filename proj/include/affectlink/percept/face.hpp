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

#ifndef AFFECTLINK_PERCEPT_FACE_HPP
#define AFFECTLINK_PERCEPT_FACE_HPP

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "affectlink/wire/protocol.hpp"

namespace affectlink::percept {

enum class FaceRole { kUnknown, kActive, kDistractor };

struct FaceBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;
  double confidence = 1.0;
  FaceRole role = FaceRole::kUnknown;  // only set by annotations

  double center_x() const { return x + w / 2.0; }
  long long area() const { return static_cast<long long>(w) * h; }

  // Same rectangle; confidence and role are ignored.
  bool SameRect(const FaceBox& o) const {
    return x == o.x && y == o.y && w == o.w && h == o.h;
  }
  friend bool operator==(const FaceBox&, const FaceBox&) = default;
};

// Intersects `box` with the frame. Throws Error{kDegenerateBox} when nothing
// of positive width and height remains.
FaceBox ClampToFrame(const FaceBox& box, int frame_width, int frame_height);

struct PerceptConfig {
  int crop_side = 64;
  int max_frames = 32;
  double confidence_threshold = 0.9;

  void Validate() const;
};

struct FaceCrop {
  int side = 0;
  std::vector<double> pixels;  // side * side * 3, row-major RGB in [0, 1]
  std::uint64_t source_seq = 0;
};

enum class NeutralSource { kFirstFrame, kProvided, kNone };

struct DeltaSequence {
  int side = 0;
  std::vector<std::vector<double>> frames;  // each side * side * 3, in [-1, 1]
  NeutralSource neutral_used = NeutralSource::kFirstFrame;
  // Frame seq and chosen box behind each delta frame.
  std::vector<std::uint64_t> source_seqs;
  std::vector<FaceBox> source_boxes;

  std::size_t size() const { return frames.size(); }
  bool empty() const { return frames.empty(); }
};

class FaceDetector {
 public:
  virtual ~FaceDetector() = default;
  virtual std::vector<FaceBox> Detect(const wire::FrameMsg& frame) const = 0;
};

// Reads sidecar ground-truth boxes keyed by frame seq.
class AnnotatedDetector : public FaceDetector {
 public:
  AnnotatedDetector() = default;
  explicit AnnotatedDetector(std::map<std::uint64_t, std::vector<FaceBox>> boxes)
      : boxes_(std::move(boxes)) {}

  // {"frames":[{"seq":n,"boxes":[{"x":..,"y":..,"w":..,"h":..,
  //   "confidence":..,"role":"active"|"distractor"}]}]}
  static AnnotatedDetector FromJson(const std::string& json_text);
  std::string ToJson() const;

  void Set(std::uint64_t seq, std::vector<FaceBox> boxes) { boxes_[seq] = std::move(boxes); }
  const std::map<std::uint64_t, std::vector<FaceBox>>& boxes() const { return boxes_; }

  std::vector<FaceBox> Detect(const wire::FrameMsg& frame) const override;

 private:
  std::map<std::uint64_t, std::vector<FaceBox>> boxes_;
};

// Finds bright rectangular blobs on a dark background (the synthetic glyph
// faces). A pixel is foreground when R + G + B exceeds `intensity_threshold`;
// each 4-connected component of at least `min_side` x `min_side` becomes a
// box whose confidence is the component's fill ratio of its bounding box.
class BlobDetector : public FaceDetector {
 public:
  explicit BlobDetector(int intensity_threshold = 96, int min_side = 16)
      : intensity_threshold_(intensity_threshold), min_side_(min_side) {}

  std::vector<FaceBox> Detect(const wire::FrameMsg& frame) const override;

 private:
  int intensity_threshold_;
  int min_side_;
};

enum class SelectionPolicy { kCentered, kRandom };

// argmin |center_x - frame_width / 2| over boxes at or above the confidence
// threshold; ties go to the larger area, then the smaller y, then the lower
// index. Throws Error{kNoFaceFound} when no box passes the threshold.
FaceBox SelectActiveFace(const std::vector<FaceBox>& boxes, int frame_width,
                         double confidence_threshold = 0.9);

// Bilinear resample of the box region to side x side, values scaled to [0, 1].
// Uses half-pixel centers, so a box already side x side is copied verbatim.
FaceCrop CropResize(const wire::FrameMsg& frame, const FaceBox& box, int side);

// delta_i = crops_i - neutral clamped to [-1, 1]; without a neutral the first
// crop is used. Throws Error{kSizeMismatch} on mixed sides and
// Error{kInvalidConfig} on an empty crop list.
DeltaSequence NeutralNormalize(const std::vector<FaceCrop>& crops,
                               const std::optional<FaceCrop>& neutral);

// Indices round(i * (N - 1) / (F - 1)), deduplicated; all indices when N <= F.
std::vector<std::size_t> SampleIndices(std::size_t n, std::size_t max_frames);

std::vector<wire::FrameMsg> SampleUtteranceFrames(const std::vector<wire::FrameMsg>& snapshot,
                                                  std::size_t max_frames);

struct ExtractOptions {
  SelectionPolicy selection = SelectionPolicy::kCentered;
  bool neutral_normalization = true;
  std::uint64_t random_seed = 0;  // kRandom only
};

// What the extraction saw on each sampled frame.
struct ExtractionTrace {
  std::vector<std::uint64_t> seqs;
  std::vector<std::vector<FaceBox>> detections;
  std::vector<std::optional<FaceBox>> chosen;
};

// Full per-utterance denoising: sample, detect, select, crop, normalize.
// Frames without an eligible face are skipped. std::nullopt signals
// NoVisualEvidence.
std::optional<DeltaSequence> ExtractFaceSequence(const std::vector<wire::FrameMsg>& snapshot,
                                                 const FaceDetector& detector,
                                                 const PerceptConfig& cfg,
                                                 const ExtractOptions& options = {},
                                                 ExtractionTrace* trace = nullptr);

}  // namespace affectlink::percept

#endif  // AFFECTLINK_PERCEPT_FACE_HPP
