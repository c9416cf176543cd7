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

#ifndef VTSPEECH_TEXT_LEXICON_H_
#define VTSPEECH_TEXT_LEXICON_H_

#include <map>
#include <string>
#include <vector>

namespace vts {

// Word-to-phonemes map. File format is one entry per line,
// "WORD PH1 PH2 ...", ";;;" comments allowed; for words with several
// pronunciations only the first listed one is kept.
class Lexicon {
 public:
  Lexicon() = default;

  static Lexicon Load(const std::string& path);
  void Save(const std::string& path) const;

  void Add(const std::string& word, std::vector<std::string> phonemes);
  bool Contains(const std::string& word) const { return entries_.count(word) > 0; }
  const std::vector<std::string>& Pronunciation(const std::string& word) const;

  size_t size() const { return entries_.size(); }
  const std::map<std::string, std::vector<std::string>>& entries() const {
    return entries_;
  }

  // Distinct phonemes used by any entry, sorted.
  std::vector<std::string> PhonemeInventory() const;

  // Per-word phoneme strings joined by a word-boundary token when
  // with_boundaries is set. Unknown words raise an OOV error naming the word.
  std::vector<std::string> Phonemize(const std::string& normalized_text,
                                     bool with_boundaries) const;

  // Inverse map for decoding: segment a phoneme stream back into words.
  // Maximizes the number of phonemes covered by complete words (DP over the
  // stream); phonemes not covered by any word are emitted as literal tokens.
  std::vector<std::string> SegmentPhonemes(
      const std::vector<std::string>& phonemes) const;

 private:
  std::map<std::string, std::vector<std::string>> entries_;
  size_t max_pron_len_ = 0;
};

}  // namespace vts

#endif  // VTSPEECH_TEXT_LEXICON_H_
