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

#ifndef VTSPEECH_ALIGN_BEAM_H_
#define VTSPEECH_ALIGN_BEAM_H_

#include <vector>

#include "align/ctc.h"

namespace vts {

class NGramLM;

// Sum of backoff-smoothed conditional log-probs over the token sequence,
// with begin-of-sequence padding. Natural log.
double LmScore(const NGramLM& lm, const std::vector<std::string>& tokens);

// Prefix beam search over collapsed hypotheses. Each prefix is ranked by
// pooled acoustic log-probability plus lm_weight times its language-model
// score; the language model sees token strings via post.alphabet. With
// lm_weight 0 and a beam wider than the number of live prefixes this is the
// exact MAP collapsed sequence. lm may be null when lm_weight is 0.
std::vector<int> CtcBeamDecode(const FramePosterior& post, const NGramLM* lm,
                               int beam, double lm_weight);

}  // namespace vts

#endif  // VTSPEECH_ALIGN_BEAM_H_
