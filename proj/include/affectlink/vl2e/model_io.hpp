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

#ifndef AFFECTLINK_VL2E_MODEL_IO_HPP
#define AFFECTLINK_VL2E_MODEL_IO_HPP

// Model file layout (integers little-endian):
//   "VL2E" | version u16 | tensor count u32 |
//   per tensor: name_len u16 | name (UTF-8) | dtype u8 (1 = f32, 2 = f64) |
//               rank u8 | dims u32 x rank | values

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "affectlink/vl2e/tensor.hpp"

namespace affectlink::vl2e {

inline constexpr std::uint16_t kModelFormatVersion = 1;

template <typename Scalar>
std::vector<std::uint8_t> SerializeParams(const ModelParams<Scalar>& params);

// Throws Error{kModelFormatError} on bad magic, version, dtype, truncation or
// trailing bytes.
template <typename Scalar>
ModelParams<Scalar> DeserializeParams(const std::vector<std::uint8_t>& bytes);

template <typename Scalar>
void SaveParams(const ModelParams<Scalar>& params, const std::string& path);

// When `cfg` is given, the loaded tensors must match it exactly (names and
// shapes); the error names the offending tensor.
template <typename Scalar>
ModelParams<Scalar> LoadParams(const std::string& path,
                               const std::optional<ModelConfig>& cfg = std::nullopt);

}  // namespace affectlink::vl2e

#endif  // AFFECTLINK_VL2E_MODEL_IO_HPP
