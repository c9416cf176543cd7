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

#ifndef VTSPEECH_CORPUS_WAV_H_
#define VTSPEECH_CORPUS_WAV_H_

#include <string>
#include <vector>

namespace vts {

struct Waveform {
  std::vector<double> samples;  // in [-1, 1]
  int sample_rate = 16000;

  double duration_seconds() const {
    return static_cast<double>(samples.size()) / sample_rate;
  }
};

// Mono PCM16 RIFF/WAVE. Samples are clipped to [-1,1] on write.
void WriteWav(const Waveform& wav, const std::string& path);
Waveform ReadWav(const std::string& path);

}  // namespace vts

#endif  // VTSPEECH_CORPUS_WAV_H_
