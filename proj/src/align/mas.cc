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

#include "align/mas.h"

namespace vts {

void ValidateAlignmentPath(const AlignmentPath& path) {
  const auto& a = path.assignment;
  VTS_CHECK_ARG(!a.empty(), "empty alignment path");
  VTS_CHECK_ARG(a.front() == 1, "alignment must start at text index 1");
  VTS_CHECK_ARG(a.back() == path.num_text, "alignment must end at last text index");
  for (size_t j = 1; j < a.size(); ++j) {
    const int step = a[j] - a[j - 1];
    VTS_CHECK_ARG(step == 0 || step == 1, "alignment steps must be 0 or +1");
  }
}

AlignmentPath MonotonicAlignmentSearch(const Array& loglike) {
  VTS_CHECK_ARG(loglike.ndim() == 2, "loglike must be [Tx x Ty]");
  const int tx = loglike.dim(0);
  const int ty = loglike.dim(1);
  VTS_CHECK_ARG(tx >= 1, "need at least one text position");
  if (ty < tx) {
    throw InfeasibleError("no surjective monotonic path: " +
                          std::to_string(ty) + " frames < " +
                          std::to_string(tx) + " text positions");
  }

  Array q({tx, ty});
  q.Fill(kLogZero);
  // stay[i][j]: best predecessor of (i, j) keeps the same text index.
  std::vector<uint8_t> stay(static_cast<size_t>(tx) * ty, 0);

  q.at(0, 0) = loglike.at(0, 0);
  for (int j = 1; j < ty; ++j) {
    // Feasible band: i <= j and enough frames remain for the rest of the text.
    const int lo = std::max(0, tx - (ty - j));
    const int hi = std::min(tx - 1, j);
    for (int i = lo; i <= hi; ++i) {
      const double from_stay = (i <= j - 1) ? q.at(i, j - 1) : kLogZero;
      const double from_advance = (i >= 1) ? q.at(i - 1, j - 1) : kLogZero;
      // Strict comparison: on ties the pointer advances, which defers every
      // advance to the latest frame, i.e. the path stays on the current text
      // index as long as the score allows.
      if (from_stay > from_advance) {
        q.at(i, j) = loglike.at(i, j) + from_stay;
        stay[static_cast<size_t>(i) * ty + j] = 1;
      } else {
        q.at(i, j) = loglike.at(i, j) + from_advance;
      }
    }
  }

  AlignmentPath path;
  path.num_text = tx;
  path.assignment.assign(ty, 0);
  int i = tx - 1;
  for (int j = ty - 1; j >= 0; --j) {
    path.assignment[j] = i + 1;
    if (j > 0 && !stay[static_cast<size_t>(i) * ty + j]) --i;
  }
  ValidateAlignmentPath(path);
  return path;
}

double AlignmentScore(const Array& loglike, const AlignmentPath& path) {
  double s = 0.0;
  for (size_t j = 0; j < path.assignment.size(); ++j) {
    s += loglike.at(path.assignment[j] - 1, static_cast<int>(j));
  }
  return s;
}

std::vector<int> AlignmentToDurations(const AlignmentPath& path) {
  std::vector<int> durations(path.num_text, 0);
  for (int idx : path.assignment) ++durations[idx - 1];
  return durations;
}

}  // namespace vts
