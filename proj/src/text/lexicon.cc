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

#include "text/lexicon.h"

#include <algorithm>
#include <fstream>
#include <set>
#include <cctype>
#include <sstream>

#include "align/metrics.h"
#include "common/status.h"
#include "text/alphabet.h"

namespace vts {

Lexicon Lexicon::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon file: " + path);
  Lexicon lex;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.rfind(";;;", 0) == 0) continue;
    std::istringstream iss(line);
    std::string word;
    if (!(iss >> word)) continue;  // blank line
    // CMU-style alternates "WORD(2)" count as later pronunciations.
    auto paren = word.find('(');
    bool alternate = paren != std::string::npos;
    if (alternate) word = word.substr(0, paren);
    // Headwords are stored lowercased so normalized transcripts resolve.
    for (char& c : word) {
      c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    std::vector<std::string> phones;
    std::string ph;
    while (iss >> ph) phones.push_back(ph);
    if (phones.empty()) {
      throw SchemaError("lexicon line " + std::to_string(lineno) +
                        ": entry for '" + word + "' has no phonemes");
    }
    if (lex.entries_.count(word)) continue;  // first pronunciation wins
    if (alternate) continue;                 // "(2)" before base form: skip
    lex.Add(word, std::move(phones));
  }
  return lex;
}

void Lexicon::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write lexicon file: " + path);
  for (const auto& [word, phones] : entries_) {
    out << word;
    for (const auto& ph : phones) out << ' ' << ph;
    out << '\n';
  }
}

void Lexicon::Add(const std::string& word, std::vector<std::string> phonemes) {
  VTS_CHECK_ARG(!word.empty(), "lexicon word must be non-empty");
  VTS_CHECK_ARG(!phonemes.empty(), "lexicon pronunciation must be non-empty");
  max_pron_len_ = std::max(max_pron_len_, phonemes.size());
  entries_[word] = std::move(phonemes);
}

const std::vector<std::string>& Lexicon::Pronunciation(
    const std::string& word) const {
  auto it = entries_.find(word);
  if (it == entries_.end()) throw OovError("word not in lexicon: " + word);
  return it->second;
}

std::vector<std::string> Lexicon::PhonemeInventory() const {
  std::set<std::string> inv;
  for (const auto& [word, phones] : entries_) {
    inv.insert(phones.begin(), phones.end());
  }
  return {inv.begin(), inv.end()};
}

std::vector<std::string> Lexicon::Phonemize(const std::string& normalized_text,
                                            bool with_boundaries) const {
  std::vector<std::string> words = SplitWords(normalized_text);
  VTS_CHECK_ARG(!words.empty(), "cannot phonemize empty text");
  std::vector<std::string> out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (with_boundaries && i > 0) out.push_back(std::string(kWordBoundaryToken));
    const auto& phones = Pronunciation(words[i]);
    out.insert(out.end(), phones.begin(), phones.end());
  }
  return out;
}

std::vector<std::string> Lexicon::SegmentPhonemes(
    const std::vector<std::string>& phonemes) const {
  const int n = static_cast<int>(phonemes.size());
  if (n == 0) return {};
  // Prefer fewer output tokens among segmentations covering the most
  // phonemes, so "K AA T" becomes one word rather than three literals.
  // best[i]: (covered, -tokens) for the prefix of length i, word at pos i-1.
  struct Cell {
    int covered = -1;
    int tokens = 0;
    int back = -1;           // start of last segment
    const std::string* word = nullptr;  // nullptr: literal phoneme
  };
  std::vector<Cell> best(n + 1);
  best[0].covered = 0;
  for (int i = 1; i <= n; ++i) {
    // Literal fallback for a single phoneme.
    if (best[i - 1].covered >= 0) {
      best[i] = {best[i - 1].covered, best[i - 1].tokens + 1, i - 1, nullptr};
    }
    int max_len = static_cast<int>(std::min<size_t>(max_pron_len_, i));
    for (int len = 1; len <= max_len; ++len) {
      int j = i - len;
      if (best[j].covered < 0) continue;
      // Find a word whose pronunciation equals phonemes[j..i).
      for (const auto& [word, phones] : entries_) {
        if (static_cast<int>(phones.size()) != len) continue;
        if (!std::equal(phones.begin(), phones.end(),
                        phonemes.begin() + j)) {
          continue;
        }
        int covered = best[j].covered + len;
        int tokens = best[j].tokens + 1;
        if (covered > best[i].covered ||
            (covered == best[i].covered && tokens < best[i].tokens)) {
          best[i] = {covered, tokens, j, &word};
        }
        break;  // entries_ is sorted; first match is deterministic
      }
    }
  }
  std::vector<std::string> out;
  for (int i = n; i > 0;) {
    const Cell& c = best[i];
    out.push_back(c.word ? *c.word : phonemes[i - 1]);
    i = c.back;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace vts
