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

#include "text/ngram.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>

#include "common/status.h"

namespace vts {

namespace {
constexpr int kUnkId = 0;
constexpr int kBosId = 1;
constexpr int kEosId = 2;
}  // namespace

NGramLM NGramLM::Train(const std::vector<std::vector<std::string>>& sentences,
                       int order, double discount) {
  VTS_CHECK_ARG(order >= 1, "n-gram order must be >= 1");
  // Zero disables smoothing entirely; useful for exact closed-form models.
  VTS_CHECK_ARG(discount >= 0.0 && discount < 1.0,
                "discount must lie in [0, 1)");
  VTS_CHECK_ARG(!sentences.empty(), "n-gram training needs sentences");

  NGramLM lm;
  lm.order_ = order;
  lm.discount_ = discount;
  lm.words_ = {kUnk, kBos, kEos};
  std::set<std::string> vocab;
  for (const auto& s : sentences) vocab.insert(s.begin(), s.end());
  vocab.erase(kUnk);
  vocab.erase(kBos);
  vocab.erase(kEos);
  for (const auto& w : vocab) lm.words_.push_back(w);
  for (size_t i = 0; i < lm.words_.size(); ++i) {
    lm.word_ids_[lm.words_[i]] = static_cast<int>(i);
  }

  lm.counts_.resize(order);
  for (const auto& s : sentences) {
    std::vector<int> ids(order - 1, kBosId);
    for (const auto& w : s) ids.push_back(lm.word_ids_.at(w));
    ids.push_back(kEosId);
    for (size_t i = order - 1; i < ids.size(); ++i) {
      for (int n = 0; n < order; ++n) {
        std::vector<int> ctx(ids.begin() + i - n, ids.begin() + i);
        ++lm.counts_[n][ctx][ids[i]];
      }
    }
  }
  return lm;
}

int NGramLM::WordId(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? kUnkId : it->second;
}

double NGramLM::CondProb(const std::vector<int>& context, int word) const {
  const double v = event_vocab_size();
  double p = 1.0 / v;  // uniform floor under the unigram level
  // Walk up from the empty context so each level discounts into the one
  // below it; a context with zero mass passes probability through unchanged.
  for (int n = 0; n <= static_cast<int>(context.size()); ++n) {
    std::vector<int> ctx(context.end() - n, context.end());
    auto it = counts_[n].find(ctx);
    if (it == counts_[n].end()) continue;
    double total = 0.0;
    for (const auto& [w, c] : it->second) total += c;
    auto wit = it->second.find(word);
    double c = wit == it->second.end() ? 0.0 : wit->second;
    double lambda = discount_ * it->second.size() / total;
    p = std::max(c - discount_, 0.0) / total + lambda * p;
  }
  return p;
}

double NGramLM::ConditionalLogProb(const std::vector<std::string>& context,
                                   const std::string& word) const {
  if (order_ < 1) throw StateError("model is untrained");
  VTS_CHECK_ARG(word != kBos, "<s> is not a predictable event");
  std::vector<int> ctx;
  size_t take = std::min<size_t>(order_ - 1, context.size());
  for (size_t i = context.size() - take; i < context.size(); ++i) {
    ctx.push_back(WordId(context[i]));
  }
  return std::log(CondProb(ctx, WordId(word)));
}

double NGramLM::SentenceLogProb(const std::vector<std::string>& words) const {
  std::vector<std::string> history(order_ - 1, kBos);
  double lp = 0.0;
  for (const auto& w : words) {
    lp += ConditionalLogProb(history, w);
    history.push_back(w);
  }
  lp += ConditionalLogProb(history, kEos);
  return lp;
}

void NGramLM::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write language model: " + path);
  out.precision(17);
  out << "VTSLM1 " << order_ << ' ' << discount_ << ' ' << words_.size()
      << '\n';
  for (const auto& w : words_) out << w << '\n';
  for (int n = 0; n < order_; ++n) {
    out << counts_[n].size() << '\n';
    for (const auto& [ctx, succ] : counts_[n]) {
      for (int id : ctx) out << id << ' ';
      out << succ.size();
      for (const auto& [w, c] : succ) out << ' ' << w << ' ' << c;
      out << '\n';
    }
  }
}

NGramLM NGramLM::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open language model: " + path);
  std::string magic;
  size_t num_words = 0;
  NGramLM lm;
  in >> magic >> lm.order_ >> lm.discount_ >> num_words;
  if (magic != "VTSLM1" || lm.order_ < 1 || num_words < 3) {
    throw SchemaError("malformed language model header: " + path);
  }
  lm.words_.resize(num_words);
  for (auto& w : lm.words_) in >> w;
  for (size_t i = 0; i < lm.words_.size(); ++i) {
    lm.word_ids_[lm.words_[i]] = static_cast<int>(i);
  }
  lm.counts_.resize(lm.order_);
  for (int n = 0; n < lm.order_; ++n) {
    size_t num_ctx = 0;
    in >> num_ctx;
    for (size_t k = 0; k < num_ctx; ++k) {
      std::vector<int> ctx(n);
      for (int& id : ctx) in >> id;
      size_t num_succ = 0;
      in >> num_succ;
      auto& succ = lm.counts_[n][ctx];
      for (size_t j = 0; j < num_succ; ++j) {
        int w = 0, c = 0;
        in >> w >> c;
        succ[w] = c;
      }
    }
  }
  if (!in) throw SchemaError("truncated language model file: " + path);
  return lm;
}

}  // namespace vts
