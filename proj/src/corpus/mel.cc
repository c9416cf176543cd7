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

#include "corpus/mel.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <mutex>

#include "common/fftw_guard.h"
#include "common/status.h"

namespace vts {

double HzToMel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double MelToHz(double mel) {
  return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0);
}

Array MelFilterbank(int n_mels, int n_fft, int sample_rate) {
  VTS_CHECK_ARG(n_mels >= 1, "need at least one mel filter");
  VTS_CHECK_ARG(n_fft >= 16, "n_fft too small");
  const int bins = n_fft / 2 + 1;
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> hz(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) {
    hz[i] = MelToHz(mel_max * i / (n_mels + 1));
  }
  Array fb({n_mels, bins});
  for (int m = 0; m < n_mels; ++m) {
    const double lo = hz[m], center = hz[m + 1], hi = hz[m + 2];
    for (int k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < center) {
        w = (f - lo) / (center - lo);
      } else if (f == center) {
        w = 1.0;
      } else if (f > center && f < hi) {
        w = (hi - f) / (hi - center);
      }
      fb.at(m, k) = w;
    }
  }
  return fb;
}

std::vector<double> MelFilterCentersHz(int n_mels, int n_fft, int sample_rate) {
  (void)n_fft;
  const double mel_max = HzToMel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) {
    centers[m] = MelToHz(mel_max * (m + 1) / (n_mels + 1));
  }
  return centers;
}

Array MelSpectrogram(const std::vector<double>& waveform, int sample_rate,
                     int n_fft, int hop, int n_mels) {
  VTS_CHECK_ARG(hop >= 1, "hop must be positive");
  VTS_CHECK_ARG(n_mels >= 8, "need at least 8 mel bins");
  VTS_CHECK_ARG(static_cast<int>(waveform.size()) >= n_fft,
                "waveform shorter than one analysis window");
  const int frames = 1 + (static_cast<int>(waveform.size()) - n_fft) / hop;
  const int bins = n_fft / 2 + 1;
  const Array fb = MelFilterbank(n_mels, n_fft, sample_rate);

  std::vector<double> window(n_fft);
  for (int i = 0; i < n_fft; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n_fft));
  }

  double* in = fftw_alloc_real(n_fft);
  fftw_complex* out = fftw_alloc_complex(bins);
  fftw_plan plan = nullptr;
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    plan = fftw_plan_dft_r2c_1d(n_fft, in, out, FFTW_ESTIMATE);
  }

  Array mel({frames, n_mels});
  std::vector<double> power(bins);
  for (int t = 0; t < frames; ++t) {
    const int start = t * hop;
    for (int i = 0; i < n_fft; ++i) {
      in[i] = waveform[start + i] * window[i];
    }
    fftw_execute(plan);
    for (int k = 0; k < bins; ++k) {
      power[k] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    }
    for (int m = 0; m < n_mels; ++m) {
      double e = 0.0;
      for (int k = 0; k < bins; ++k) e += fb.at(m, k) * power[k];
      mel.at(t, m) = std::log(std::max(e, kMelEnergyFloor));
    }
  }

  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return mel;
}

}  // namespace vts
