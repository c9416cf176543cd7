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

#ifndef VTSPEECH_CORPUS_MEL_H_
#define VTSPEECH_CORPUS_MEL_H_

#include <vector>

#include "nn/array.h"

namespace vts {

// Energy floor before the natural log, so digital silence maps to
// ln(kMelEnergyFloor) in every bin.
inline constexpr double kMelEnergyFloor = 1e-10;

double HzToMel(double hz);
double MelToHz(double mel);

// Triangular filterbank [n_mels x (n_fft/2 + 1)] spanning 0..sample_rate/2.
Array MelFilterbank(int n_mels, int n_fft, int sample_rate);
// Center frequency in Hz of each filter (the triangle peaks).
std::vector<double> MelFilterCentersHz(int n_mels, int n_fft, int sample_rate);

// Log-mel energies [frames x n_mels]; frames = 1 + floor((len - n_fft)/hop).
// Hann-windowed power spectrum through the triangular filterbank, floored at
// kMelEnergyFloor, natural log.
Array MelSpectrogram(const std::vector<double>& waveform, int sample_rate,
                     int n_fft, int hop, int n_mels);

}  // namespace vts

#endif  // VTSPEECH_CORPUS_MEL_H_
