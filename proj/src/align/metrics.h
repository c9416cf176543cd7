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

#ifndef VTSPEECH_ALIGN_METRICS_H_
#define VTSPEECH_ALIGN_METRICS_H_

#include <string>
#include <vector>

namespace vts {

// Unit-cost Levenshtein distance (insert / delete / substitute).
int EditDistance(const std::vector<std::string>& ref,
                 const std::vector<std::string>& hyp);
int EditDistance(const std::string& ref, const std::string& hyp);

std::vector<std::string> SplitWords(const std::string& text);
std::string StripWhitespace(const std::string& text);

// Character error rate over whitespace-stripped character streams.
double Cer(const std::string& ref, const std::string& hyp);
// Word error rate over whitespace-split words.
double Wer(const std::string& ref, const std::string& hyp);

}  // namespace vts

#endif  // VTSPEECH_ALIGN_METRICS_H_
