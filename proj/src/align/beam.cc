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

#include "align/beam.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "common/status.h"
#include "text/alphabet.h"
#include "text/ngram.h"

namespace vts {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}

struct Hyp {
  double pb = kLogZero;   // mass of paths ending in blank
  double pnb = kLogZero;  // mass of paths ending in the final token
  double lm = 0.0;
  bool lm_set = false;
};
}  // namespace

double LmScore(const NGramLM& lm, const std::vector<std::string>& tokens) {
  VTS_CHECK_ARG(!tokens.empty(), "cannot score an empty sequence");
  std::vector<std::string> history(lm.order() - 1, NGramLM::kBos);
  double lp = 0.0;
  for (const auto& t : tokens) {
    lp += lm.ConditionalLogProb(history, t);
    history.push_back(t);
  }
  return lp;
}

std::vector<int> CtcBeamDecode(const FramePosterior& post, const NGramLM* lm,
                               int beam, double lm_weight) {
  VTS_CHECK_ARG(beam >= 1, "beam width must be >= 1");
  const bool use_lm = lm_weight != 0.0;
  if (use_lm) {
    VTS_CHECK_ARG(lm != nullptr, "lm fusion requires a language model");
    VTS_CHECK_ARG(post.alphabet != nullptr,
                  "lm fusion requires the posterior's alphabet");
  }
  const int T = post.num_frames();
  const int K = post.alphabet_size();
  const Array& lp = post.log_probs;

  // Incremental language-model cost of appending token k to prefix.
  auto lm_step = [&](const std::vector<int>& prefix, int k) -> double {
    if (!use_lm) return 0.0;
    std::vector<std::string> ctx;
    size_t take = std::min<size_t>(lm->order() - 1, prefix.size());
    for (size_t i = prefix.size() - take; i < prefix.size(); ++i) {
      ctx.push_back(post.alphabet->token(prefix[i]));
    }
    while (ctx.size() + 1 < static_cast<size_t>(lm->order())) {
      ctx.insert(ctx.begin(), NGramLM::kBos);
    }
    return lm->ConditionalLogProb(ctx, post.alphabet->token(k));
  };

  std::map<std::vector<int>, Hyp> beams;
  beams[{}] = Hyp{0.0, kLogZero, 0.0, true};

  for (int t = 0; t < T; ++t) {
    std::map<std::vector<int>, Hyp> next;
    for (const auto& [prefix, hyp] : beams) {
      const double total = LogAdd(hyp.pb, hyp.pnb);
      for (int k = 0; k < K; ++k) {
        const double p = lp.at(t, k);
        if (k == post.blank) {
          Hyp& h = next[prefix];
          h.pb = LogAdd(h.pb, total + p);
          if (!h.lm_set) {
            h.lm = hyp.lm;
            h.lm_set = true;
          }
          continue;
        }
        if (!prefix.empty() && k == prefix.back()) {
          // Same token again: a repeat within the current emission extends
          // this prefix; a fresh emission after a blank extends prefix+[k].
          Hyp& same = next[prefix];
          same.pnb = LogAdd(same.pnb, hyp.pnb + p);
          if (!same.lm_set) {
            same.lm = hyp.lm;
            same.lm_set = true;
          }
          std::vector<int> np = prefix;
          np.push_back(k);
          Hyp& ext = next[np];
          ext.pnb = LogAdd(ext.pnb, hyp.pb + p);
          if (!ext.lm_set) {
            ext.lm = hyp.lm + lm_step(prefix, k);
            ext.lm_set = true;
          }
        } else {
          std::vector<int> np = prefix;
          np.push_back(k);
          Hyp& ext = next[np];
          ext.pnb = LogAdd(ext.pnb, total + p);
          if (!ext.lm_set) {
            ext.lm = hyp.lm + lm_step(prefix, k);
            ext.lm_set = true;
          }
        }
      }
    }
    // Prune to the beam by fused score; ties prefer the shorter or
    // lexicographically smaller prefix so pruning is deterministic.
    if (static_cast<int>(next.size()) > beam) {
      std::vector<std::pair<double, const std::vector<int>*>> ranked;
      ranked.reserve(next.size());
      for (const auto& [prefix, hyp] : next) {
        ranked.emplace_back(LogAdd(hyp.pb, hyp.pnb) + lm_weight * hyp.lm,
                            &prefix);
      }
      std::sort(ranked.begin(), ranked.end(),
                [](const auto& a, const auto& b) {
                  if (a.first != b.first) return a.first > b.first;
                  return *a.second < *b.second;
                });
      std::map<std::vector<int>, Hyp> kept;
      for (int i = 0; i < beam; ++i) {
        kept.emplace(*ranked[i].second, next.at(*ranked[i].second));
      }
      next = std::move(kept);
    }
    beams = std::move(next);
  }

  const std::vector<int>* best = nullptr;
  double best_score = -kInf;
  for (const auto& [prefix, hyp] : beams) {
    const double score = LogAdd(hyp.pb, hyp.pnb) + lm_weight * hyp.lm;
    if (score > best_score) {
      best_score = score;
      best = &prefix;
    }
  }
  return *best;
}

}  // namespace vts
