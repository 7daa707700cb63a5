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

#include "affectlink/context/tokenizer.hpp"

#include <cctype>

#include "affectlink/error.hpp"

namespace affectlink::context {
namespace {

bool IsAsciiSpace(unsigned char c) { return c < 0x80 && std::isspace(c); }
bool IsAsciiPunct(unsigned char c) { return c < 0x80 && std::ispunct(c); }

}  // namespace

std::uint64_t StableHash(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

Tokenizer::Tokenizer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size_ <= static_cast<std::size_t>(kFirstWordId)) {
    throw Error(ErrorCode::kInvalidConfig, "vocabulary must exceed the special tokens");
  }
}

TokenId Tokenizer::WordId(std::string_view word) const {
  if (word == kMaskToken) return kMaskId;
  if (word == kSepToken) return kSepId;
  return kFirstWordId +
         static_cast<TokenId>(StableHash(word) % (vocab_size_ - kFirstWordId));
}

std::vector<std::string> Tokenizer::Split(std::string_view text) const {
  std::vector<std::string> words;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) words.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c == '<') {
      const std::string_view rest = text.substr(i);
      if (rest.starts_with(kMaskToken)) {
        flush();
        words.emplace_back(kMaskToken);
        i += 6;
        continue;
      }
      if (rest.starts_with(kSepToken)) {
        flush();
        words.emplace_back(kSepToken);
        i += 5;
        continue;
      }
    }
    if (IsAsciiSpace(c) || IsAsciiPunct(c)) {
      flush();
    } else {
      current.push_back(c < 0x80 ? static_cast<char>(std::tolower(c)) : static_cast<char>(c));
    }
    ++i;
  }
  flush();
  return words;
}

std::vector<TokenId> Tokenizer::Tokenize(std::string_view text, std::size_t max_tokens) const {
  const auto words = Split(text);
  const std::size_t keep = std::min(words.size(), max_tokens);
  std::vector<TokenId> ids;
  ids.reserve(keep);
  for (std::size_t i = words.size() - keep; i < words.size(); ++i) {
    ids.push_back(WordId(words[i]));
  }
  return ids;
}

}  // namespace affectlink::context
