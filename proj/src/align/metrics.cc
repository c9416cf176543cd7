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

#include "align/metrics.h"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "common/status.h"

namespace vts {

namespace {
template <typename Seq>
int EditDistanceImpl(const Seq& ref, const Seq& hyp) {
  const size_t n = ref.size();
  const size_t m = hyp.size();
  std::vector<int> prev(m + 1), cur(m + 1);
  for (size_t j = 0; j <= m; ++j) prev[j] = static_cast<int>(j);
  for (size_t i = 1; i <= n; ++i) {
    cur[0] = static_cast<int>(i);
    for (size_t j = 1; j <= m; ++j) {
      const int sub = prev[j - 1] + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      cur[j] = std::min({sub, prev[j] + 1, cur[j - 1] + 1});
    }
    std::swap(prev, cur);
  }
  return prev[m];
}
}  // namespace

int EditDistance(const std::vector<std::string>& ref,
                 const std::vector<std::string>& hyp) {
  return EditDistanceImpl(ref, hyp);
}

int EditDistance(const std::string& ref, const std::string& hyp) {
  return EditDistanceImpl(ref, hyp);
}

std::vector<std::string> SplitWords(const std::string& text) {
  std::vector<std::string> words;
  std::istringstream is(text);
  std::string w;
  while (is >> w) words.push_back(w);
  return words;
}

std::string StripWhitespace(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
  }
  return out;
}

double Cer(const std::string& ref, const std::string& hyp) {
  const std::string r = StripWhitespace(ref);
  VTS_CHECK_ARG(!r.empty(), "empty reference in CER");
  const std::string h = StripWhitespace(hyp);
  return static_cast<double>(EditDistance(r, h)) / static_cast<double>(r.size());
}

double Wer(const std::string& ref, const std::string& hyp) {
  const auto r = SplitWords(ref);
  VTS_CHECK_ARG(!r.empty(), "empty reference in WER");
  const auto h = SplitWords(hyp);
  return static_cast<double>(EditDistance(r, h)) / static_cast<double>(r.size());
}

}  // namespace vts
