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

#ifndef VTSPEECH_ALIGN_CTC_H_
#define VTSPEECH_ALIGN_CTC_H_

#include <vector>

#include "nn/array.h"

namespace vts {

class TokenAlphabet;

// Frames-by-alphabet matrix of per-frame natural-log label probabilities.
// Each row is expected to log-sum-exp to 0 when it represents a posterior,
// but the loss below is well defined (and differentiable) for arbitrary
// log activations, which is what the finite-difference checks exercise.
// The alphabet is optional and only consulted by decoders that need token
// strings (language-model fusion).
struct FramePosterior {
  Array log_probs;  // [T x K]
  int blank = 0;
  const TokenAlphabet* alphabet = nullptr;

  int num_frames() const { return log_probs.dim(0); }
  int alphabet_size() const { return log_probs.dim(1); }
};

// Collapse a frame-level path: remove adjacent repeats, then blanks.
std::vector<int> CollapsePath(const std::vector<int>& path, int blank);

// Minimum number of frames that can carry the label sequence (length plus
// one forced blank between each adjacent repeat).
int MinFramesForLabels(const std::vector<int>& labels);

// Negative log-likelihood of the label sequence under the posterior,
// summing over every frame-level path that collapses to it. Computed by the
// log-space forward recursion. If grad is non-null it receives
// d(nll)/d(log_probs), the alpha-beta occupancy gradient.
double CtcNll(const FramePosterior& post, const std::vector<int>& labels,
              Array* grad = nullptr);

// Reference implementation by explicit enumeration of all K^T paths.
// Returns +inf for label sequences with no admissible path. Refuses
// instances with K^T > 10^6.
double CtcEnumerationNll(const FramePosterior& post,
                         const std::vector<int>& labels);

// Per-frame argmax collapsed by the repeat/blank rule.
std::vector<int> CtcGreedyDecode(const FramePosterior& post);

// Reference MAP decoder: enumerates all K^T paths, pools probability mass
// by collapsed sequence, returns the argmax sequence. Ties break toward the
// lexicographically smaller sequence. Refuses instances with K^T > 10^6.
std::vector<int> CtcExhaustiveMapDecode(const FramePosterior& post);

}  // namespace vts

#endif  // VTSPEECH_ALIGN_CTC_H_
