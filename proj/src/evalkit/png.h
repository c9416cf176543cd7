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

#ifndef VTSPEECH_EVALKIT_PNG_H_
#define VTSPEECH_EVALKIT_PNG_H_

#include <string>
#include <vector>

#include "nn/array.h"

namespace vts {

// Writes pixels as an 8-bit grayscale PNG. `pixels` is [height x width]
// with values in [0,1]; values outside are clamped during quantization.
// Each label becomes a tEXt chunk (keyword "Label"), so panel names ride
// along without a font rasterizer. Output bytes are deterministic.
void WritePngGray8(const std::string& path, const Array& pixels,
                   const std::vector<std::string>& labels = {});

// The PNG byte stream for the same inputs, for tests and round trips.
std::vector<unsigned char> EncodePngGray8(
    const Array& pixels, const std::vector<std::string>& labels = {});

}  // namespace vts

#endif  // VTSPEECH_EVALKIT_PNG_H_
