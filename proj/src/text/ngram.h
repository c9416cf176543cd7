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

#ifndef VTSPEECH_TEXT_NGRAM_H_
#define VTSPEECH_TEXT_NGRAM_H_

#include <map>
#include <string>
#include <vector>

namespace vts {

// Backoff n-gram model with absolute discounting. Probability mass removed
// from seen n-grams is redistributed through the next lower order, ending in
// a uniform distribution over the event vocabulary, so conditionals sum to 1
// by construction. "<s>" is context-only and never predicted; "</s>" and
// "<unk>" are ordinary events.
class NGramLM {
 public:
  static constexpr const char* kUnk = "<unk>";
  static constexpr const char* kBos = "<s>";
  static constexpr const char* kEos = "</s>";

  NGramLM() = default;

  static NGramLM Train(const std::vector<std::vector<std::string>>& sentences,
                       int order, double discount = 0.75);

  int order() const { return order_; }
  double discount() const { return discount_; }
  // Number of predictable events (training words + </s> + <unk>).
  int event_vocab_size() const { return static_cast<int>(words_.size()) - 1; }
  const std::vector<std::string>& vocabulary() const { return words_; }

  // log P(word | context); context is the raw history, only the final
  // order-1 entries are used. Unknown words map to <unk>.
  double ConditionalLogProb(const std::vector<std::string>& context,
                            const std::string& word) const;

  // Sum of conditional log probs for every word plus the end event, with
  // the history seeded by <s> markers.
  double SentenceLogProb(const std::vector<std::string>& words) const;

  void Save(const std::string& path) const;
  static NGramLM Load(const std::string& path);

 private:
  int WordId(const std::string& word) const;
  double CondProb(const std::vector<int>& context, int word) const;

  int order_ = 0;
  double discount_ = 0.75;
  std::vector<std::string> words_;          // id -> word; [0]=<unk>,[1]=<s>,[2]=</s>
  std::map<std::string, int> word_ids_;
  // counts_[n]: context of length n -> successor counts.
  std::vector<std::map<std::vector<int>, std::map<int, int>>> counts_;
};

}  // namespace vts

#endif  // VTSPEECH_TEXT_NGRAM_H_
