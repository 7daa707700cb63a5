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

#ifndef AFFECTLINK_CONTEXT_TOKENIZER_HPP
#define AFFECTLINK_CONTEXT_TOKENIZER_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "affectlink/context/dialogue.hpp"

namespace affectlink::context {

using TokenId = std::int32_t;

// Hashed-vocabulary tokenizer. Ids 0..2 are reserved for the special tokens;
// every word maps to 3 + (fnv1a64(word) mod (V - 3)).
class Tokenizer {
 public:
  static constexpr TokenId kMaskId = 0;
  static constexpr TokenId kSepId = 1;
  static constexpr TokenId kUnkId = 2;
  static constexpr TokenId kFirstWordId = 3;

  explicit Tokenizer(std::size_t vocab_size = 4096);

  std::size_t vocab_size() const { return vocab_size_; }

  TokenId WordId(std::string_view lowercase_word) const;

  // Lowercases, splits on whitespace and ASCII punctuation, and keeps the
  // last `max_tokens` tokens so the prompt and mask survive truncation.
  std::vector<TokenId> Tokenize(std::string_view text, std::size_t max_tokens) const;
  std::vector<TokenId> Tokenize(const ContextString& cs, std::size_t max_tokens) const {
    return Tokenize(cs.text, max_tokens);
  }

  // Tokens before truncation.
  std::vector<std::string> Split(std::string_view text) const;

 private:
  std::size_t vocab_size_;
};

std::uint64_t StableHash(std::string_view bytes);

}  // namespace affectlink::context

#endif  // AFFECTLINK_CONTEXT_TOKENIZER_HPP
