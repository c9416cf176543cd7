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

#include "text/alphabet.h"

#include "common/status.h"

namespace vts {

TokenAlphabet::TokenAlphabet(std::vector<std::string> tokens, int blank_index)
    : tokens_(std::move(tokens)), blank_index_(blank_index) {
  VTS_CHECK_ARG(blank_index_ >= -1 && blank_index_ < size(),
                "blank index outside alphabet");
  for (int i = 0; i < size(); ++i) {
    const bool inserted = index_.emplace(tokens_[i], i).second;
    VTS_CHECK_ARG(inserted, "duplicate token in alphabet: " + tokens_[i]);
  }
}

TokenAlphabet TokenAlphabet::WithBlank(const std::vector<std::string>& phonemes) {
  std::vector<std::string> tokens;
  tokens.reserve(phonemes.size() + 1);
  tokens.push_back(kBlankToken);
  tokens.insert(tokens.end(), phonemes.begin(), phonemes.end());
  return TokenAlphabet(std::move(tokens), 0);
}

TokenAlphabet TokenAlphabet::WithWordBoundary(
    const std::vector<std::string>& phonemes) {
  std::vector<std::string> tokens = phonemes;
  tokens.push_back(kWordBoundaryToken);
  return TokenAlphabet(std::move(tokens), -1);
}

const std::string& TokenAlphabet::token(int id) const {
  VTS_CHECK_ARG(id >= 0 && id < size(), "token id outside alphabet");
  return tokens_[id];
}

bool TokenAlphabet::Contains(const std::string& token) const {
  return index_.count(token) > 0;
}

int TokenAlphabet::Id(const std::string& token) const {
  auto it = index_.find(token);
  if (it == index_.end()) throw ArgumentError("unknown token: " + token);
  return it->second;
}

std::vector<int> TokenAlphabet::Encode(
    const std::vector<std::string>& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(Id(t));
  return ids;
}

std::vector<std::string> TokenAlphabet::Decode(const std::vector<int>& ids) const {
  std::vector<std::string> tokens;
  tokens.reserve(ids.size());
  for (int id : ids) tokens.push_back(token(id));
  return tokens;
}

}  // namespace vts
