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

#ifndef VTSPEECH_TEXT_NORMALIZE_H_
#define VTSPEECH_TEXT_NORMALIZE_H_

#include <string>

namespace vts {

// Lowercase, strip punctuation, collapse whitespace. Throws an
// empty-transcript error if nothing survives.
std::string NormalizeText(const std::string& raw);

}  // namespace vts

#endif  // VTSPEECH_TEXT_NORMALIZE_H_
