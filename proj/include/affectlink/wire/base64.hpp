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

#ifndef AFFECTLINK_WIRE_BASE64_HPP
#define AFFECTLINK_WIRE_BASE64_HPP

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace affectlink::wire {

std::string Base64Encode(const std::vector<std::uint8_t>& bytes);
// Standard alphabet with padding; std::nullopt on malformed input.
std::optional<std::vector<std::uint8_t>> Base64Decode(std::string_view text);

}  // namespace affectlink::wire

#endif  // AFFECTLINK_WIRE_BASE64_HPP
