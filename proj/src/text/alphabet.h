// Copyright (c) 2026 The vtspeech authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef VTSPEECH_TEXT_ALPHABET_H_
#define VTSPEECH_TEXT_ALPHABET_H_

#include <string>
#include <unordered_map>
#include <vector>

namespace vts {

inline constexpr const char* kBlankToken = "<blank>";
inline constexpr const char* kWordBoundaryToken = "|";

// Ordered token set with an optional CTC blank. blank_index is -1 when the
// alphabet has no blank (the synthesizer-side alphabet).
class TokenAlphabet {
 public:
  TokenAlphabet() = default;
  // Tokens must be unique; blank_index of -1 means no blank.
  TokenAlphabet(std::vector<std::string> tokens, int blank_index);

  // Recognizer alphabet: blank at index 0 followed by the phonemes.
  static TokenAlphabet WithBlank(const std::vector<std::string>& phonemes);
  // Synthesizer alphabet: phonemes plus the word-boundary token, no blank.
  static TokenAlphabet WithWordBoundary(const std::vector<std::string>& phonemes);

  int size() const { return static_cast<int>(tokens_.size()); }
  int blank_index() const { return blank_index_; }
  bool has_blank() const { return blank_index_ >= 0; }
  const std::vector<std::string>& tokens() const { return tokens_; }
  const std::string& token(int id) const;
  bool Contains(const std::string& token) const;
  int Id(const std::string& token) const;  // throws on unknown token

  std::vector<int> Encode(const std::vector<std::string>& tokens) const;
  std::vector<std::string> Decode(const std::vector<int>& ids) const;

  bool operator==(const TokenAlphabet& other) const {
    return tokens_ == other.tokens_ && blank_index_ == other.blank_index_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
  int blank_index_ = -1;
};

}  // namespace vts

#endif  // VTSPEECH_TEXT_ALPHABET_H_
