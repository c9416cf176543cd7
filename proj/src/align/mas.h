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

#ifndef VTSPEECH_ALIGN_MAS_H_
#define VTSPEECH_ALIGN_MAS_H_

#include <vector>

#include "nn/array.h"

namespace vts {

// Monotonic surjective text-to-frame alignment. assignment[j] is the 1-based
// text index of frame j; it starts at 1, ends at Tx and moves by 0 or +1.
struct AlignmentPath {
  std::vector<int> assignment;
  int num_text = 0;
};

void ValidateAlignmentPath(const AlignmentPath& path);

// Best monotonic surjective path under the log-likelihood matrix
// [Tx_text x Ty_frames], by dynamic programming with backtracking.
// Ties break toward staying on the current text index.
AlignmentPath MonotonicAlignmentSearch(const Array& loglike);

// Score of an explicit path under a log-likelihood matrix.
double AlignmentScore(const Array& loglike, const AlignmentPath& path);

// duration[i] = number of frames assigned to text index i+1.
std::vector<int> AlignmentToDurations(const AlignmentPath& path);

}  // namespace vts

#endif  // VTSPEECH_ALIGN_MAS_H_
