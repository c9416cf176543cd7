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

#include "align/ctc.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "common/status.h"

namespace vts {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

void ValidateLabels(const FramePosterior& post, const std::vector<int>& labels) {
  const int K = post.alphabet_size();
  for (int l : labels) {
    VTS_CHECK_ARG(l != post.blank, "blank token not allowed in CTC labels");
    VTS_CHECK_ARG(l >= 0 && l < K, "CTC label outside alphabet");
  }
}

double LogAdd(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b <= kLogZero) return a;
  return a + std::log1p(std::exp(b - a));
}
}  // namespace

std::vector<int> CollapsePath(const std::vector<int>& path, int blank) {
  std::vector<int> out;
  int prev = blank;
  for (int s : path) {
    if (s != prev && s != blank) out.push_back(s);
    prev = s;
  }
  return out;
}

int MinFramesForLabels(const std::vector<int>& labels) {
  int repeats = 0;
  for (size_t i = 1; i < labels.size(); ++i) {
    if (labels[i] == labels[i - 1]) ++repeats;
  }
  return static_cast<int>(labels.size()) + repeats;
}

double CtcNll(const FramePosterior& post, const std::vector<int>& labels,
              Array* grad) {
  ValidateLabels(post, labels);
  const int T = post.num_frames();
  const int K = post.alphabet_size();
  const int L = static_cast<int>(labels.size());
  if (MinFramesForLabels(labels) > T) {
    throw InfeasibleError("CTC label sequence too long for " +
                          std::to_string(T) + " frames");
  }

  // Extended sequence: blank, l1, blank, l2, ..., blank.
  const int S = 2 * L + 1;
  std::vector<int> ext(S, post.blank);
  for (int i = 0; i < L; ++i) ext[2 * i + 1] = labels[i];

  const Array& lp = post.log_probs;
  std::vector<double> alpha(static_cast<size_t>(T) * S, kLogZero);
  auto a = [&](int t, int s) -> double& { return alpha[static_cast<size_t>(t) * S + s]; };

  a(0, 0) = lp.at(0, ext[0]);
  if (S > 1) a(0, 1) = lp.at(0, ext[1]);
  for (int t = 1; t < T; ++t) {
    // States reachable at frame t lie in a diagonal band.
    const int lo = std::max(0, S - 2 * (T - t));
    const int hi = std::min(S - 1, 2 * (t + 1) - 1);
    for (int s = lo; s <= hi; ++s) {
      double acc = a(t - 1, s);
      if (s >= 1) acc = LogAdd(acc, a(t - 1, s - 1));
      if (s >= 2 && ext[s] != post.blank && ext[s] != ext[s - 2]) {
        acc = LogAdd(acc, a(t - 1, s - 2));
      }
      if (acc > kLogZero) a(t, s) = acc + lp.at(t, ext[s]);
    }
  }

  double log_p = a(T - 1, S - 1);
  if (S > 1) log_p = LogAdd(log_p, a(T - 1, S - 2));

  if (grad != nullptr) {
    *grad = Array({T, K});
    // beta excludes the emission at its own frame, so alpha_t + beta_t is the
    // log-probability of all paths occupying state s at frame t.
    std::vector<double> beta(static_cast<size_t>(T) * S, kLogZero);
    auto b = [&](int t, int s) -> double& { return beta[static_cast<size_t>(t) * S + s]; };
    b(T - 1, S - 1) = 0.0;
    if (S > 1) b(T - 1, S - 2) = 0.0;
    for (int t = T - 2; t >= 0; --t) {
      const int lo = std::max(0, S - 2 * (T - t));
      const int hi = std::min(S - 1, 2 * (t + 1) - 1);
      for (int s = lo; s <= hi; ++s) {
        double acc = kLogZero;
        if (b(t + 1, s) > kLogZero) acc = b(t + 1, s) + lp.at(t + 1, ext[s]);
        if (s + 1 < S && b(t + 1, s + 1) > kLogZero) {
          acc = LogAdd(acc, b(t + 1, s + 1) + lp.at(t + 1, ext[s + 1]));
        }
        if (s + 2 < S && ext[s + 2] != post.blank && ext[s + 2] != ext[s] &&
            b(t + 1, s + 2) > kLogZero) {
          acc = LogAdd(acc, b(t + 1, s + 2) + lp.at(t + 1, ext[s + 2]));
        }
        b(t, s) = acc;
      }
    }
    for (int t = 0; t < T; ++t) {
      for (int s = 0; s < S; ++s) {
        const double occ = a(t, s) + b(t, s);
        if (occ <= kLogZero) continue;
        grad->at(t, ext[s]) -= std::exp(occ - log_p);
      }
    }
  }
  return -log_p;
}

double CtcEnumerationNll(const FramePosterior& post,
                         const std::vector<int>& labels) {
  ValidateLabels(post, labels);
  const int T = post.num_frames();
  const int K = post.alphabet_size();
  double paths = std::pow(static_cast<double>(K), T);
  VTS_CHECK_ARG(paths <= 1e6, "enumeration instance too large (K^T > 10^6)");

  const Array& lp = post.log_probs;
  std::vector<int> path(T, 0);
  std::vector<double> matching;
  while (true) {
    if (CollapsePath(path, post.blank) == labels) {
      double s = 0.0;
      for (int t = 0; t < T; ++t) s += lp.at(t, path[t]);
      matching.push_back(s);
    }
    int i = T - 1;
    while (i >= 0 && path[i] == K - 1) path[i--] = 0;
    if (i < 0) break;
    ++path[i];
  }
  if (matching.empty()) return kInf;
  return -LogSumExp(matching.data(), static_cast<int>(matching.size()));
}

std::vector<int> CtcExhaustiveMapDecode(const FramePosterior& post) {
  const int T = post.num_frames();
  const int K = post.alphabet_size();
  double paths = std::pow(static_cast<double>(K), T);
  VTS_CHECK_ARG(paths <= 1e6, "enumeration instance too large (K^T > 10^6)");

  const Array& lp = post.log_probs;
  std::map<std::vector<int>, double> mass;
  std::vector<int> path(T, 0);
  while (true) {
    double s = 0.0;
    for (int t = 0; t < T; ++t) s += lp.at(t, path[t]);
    std::vector<int> seq = CollapsePath(path, post.blank);
    auto [it, fresh] = mass.emplace(std::move(seq), kLogZero);
    it->second = LogAdd(it->second, s);
    int i = T - 1;
    while (i >= 0 && path[i] == K - 1) path[i--] = 0;
    if (i < 0) break;
    ++path[i];
  }
  // Strictly-greater update over the sorted map gives lexicographic
  // tie-breaking, mirrored by the beam decoder's pruning order.
  const std::vector<int>* best = nullptr;
  double best_mass = -kInf;
  for (const auto& [seq, m] : mass) {
    if (m > best_mass) {
      best_mass = m;
      best = &seq;
    }
  }
  return *best;
}

std::vector<int> CtcGreedyDecode(const FramePosterior& post) {
  const int T = post.num_frames();
  const int K = post.alphabet_size();
  std::vector<int> best(T);
  for (int t = 0; t < T; ++t) {
    int arg = 0;
    double m = post.log_probs.at(t, 0);
    for (int k = 1; k < K; ++k) {
      if (post.log_probs.at(t, k) > m) {
        m = post.log_probs.at(t, k);
        arg = k;
      }
    }
    best[t] = arg;
  }
  return CollapsePath(best, post.blank);
}

}  // namespace vts
