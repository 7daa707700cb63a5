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

#ifndef AFFECTLINK_ERROR_HPP
#define AFFECTLINK_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace affectlink {

enum class ErrorCode {
  // wire
  kOversizeMessage,
  kBadMagic,
  kUnknownVariant,
  kMalformedPayload,
  kStaleFrame,
  kInvalidWindow,
  kTransportError,
  // percept
  kNoFaceFound,
  kDegenerateBox,
  kSizeMismatch,
  kInvalidConfig,
  // context
  kNoCurrentTurn,
  kNonContiguousTurn,
  // vl2e
  kConfigError,
  kNoTextInput,
  kBadLabel,
  kDivergenceError,
  kModelFormatError,
  // harness
  kEvalError,
  kScriptError,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOversizeMessage: return "OversizeMessage";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kUnknownVariant: return "UnknownVariant";
    case ErrorCode::kMalformedPayload: return "MalformedPayload";
    case ErrorCode::kStaleFrame: return "StaleFrame";
    case ErrorCode::kInvalidWindow: return "InvalidWindow";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kNoFaceFound: return "NoFaceFound";
    case ErrorCode::kDegenerateBox: return "DegenerateBox";
    case ErrorCode::kSizeMismatch: return "SizeMismatch";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kNoCurrentTurn: return "NoCurrentTurn";
    case ErrorCode::kNonContiguousTurn: return "NonContiguousTurn";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kNoTextInput: return "NoTextInput";
    case ErrorCode::kBadLabel: return "BadLabel";
    case ErrorCode::kDivergenceError: return "DivergenceError";
    case ErrorCode::kModelFormatError: return "ModelFormatError";
    case ErrorCode::kEvalError: return "EvalError";
    case ErrorCode::kScriptError: return "ScriptError";
  }
  return "Unknown";
}

}  // namespace affectlink

#endif  // AFFECTLINK_ERROR_HPP
