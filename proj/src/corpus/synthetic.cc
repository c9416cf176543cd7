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

#include "corpus/synthetic.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "common/rng.h"
#include "common/status.h"

namespace vts {

namespace fs = std::filesystem;

namespace {

constexpr double kWordGapSeconds = 0.032;

struct SpeakerStyle {
  double intensity = 1.0;  // articulator brightness scale
  int lip_jitter_r = 0;    // ellipse center offset, pixels
  int lip_jitter_c = 0;
  int tongue_offset = 0;   // bar baseline offset, pixels
  double base_pitch = 120.0;
  double tempo = 1.0;  // audio-vs-video rate
};

SpeakerStyle MakeStyle(uint64_t seed, int speaker) {
  Rng rng(SplitSeed(seed, "style/spk" + std::to_string(speaker)));
  SpeakerStyle s;
  s.intensity = 0.8 + 0.2 * rng.Uniform();
  s.lip_jitter_r = static_cast<int>(rng.UniformInt(-2, 2));
  s.lip_jitter_c = static_cast<int>(rng.UniformInt(-2, 2));
  s.tongue_offset = static_cast<int>(rng.UniformInt(-3, 3));
  s.base_pitch = 100.0 + rng.Uniform(0.0, 80.0);
  const double tempos[3] = {0.9, 1.0, 1.08};
  s.tempo = tempos[speaker % 3];
  return s;
}

// Lip aperture shared between inventory neighbors 2k and 2k+1 of each half,
// unique otherwise. Onset apertures sit below nucleus apertures.
double LipAperture(int index, int half_size, bool is_onset) {
  const int pair = (index % half_size) / 2;
  const int npairs = (half_size + 1) / 2;
  const double base = is_onset ? 0.08 : 0.62;
  const double span = is_onset ? 0.42 : 0.33;
  if (npairs <= 1) return base;
  return base + span * pair / (npairs - 1);
}

std::string Lower(const std::string& s) {
  std::string out = s;
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

}  // namespace

std::vector<std::string> DefaultPhonemeInventory() {
  return {"K", "T", "P", "S", "AA", "EH", "IY", "UW"};
}

Lexicon BuildSyntheticLexicon(const std::vector<std::string>& inventory) {
  VTS_CHECK_ARG(inventory.size() >= 4,
                "phoneme inventory needs at least 4 entries");
  const int half = static_cast<int>(inventory.size()) / 2;
  Lexicon lex;
  for (int c = 0; c < half; ++c) {
    for (int v = half; v < static_cast<int>(inventory.size()); ++v) {
      lex.Add(Lower(inventory[c]) + Lower(inventory[v]),
              {inventory[c], inventory[v]});
    }
  }
  return lex;
}

SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec) {
  VTS_CHECK_ARG(spec.num_speakers >= 1, "need at least one speaker");
  VTS_CHECK_ARG(spec.utterances_per_speaker >= 1,
                "need at least one utterance per speaker");
  VTS_CHECK_ARG(spec.frame_span >= 2, "frame span must be at least 2");
  VTS_CHECK_ARG(spec.frame_size >= 32, "frame size must be at least 32");
  VTS_CHECK_ARG(spec.fps > 0.0, "fps must be positive");
  VTS_CHECK_ARG(!spec.out_dir.empty(), "output directory required");
  std::vector<std::string> inventory = spec.phoneme_inventory;
  if (inventory.empty()) inventory = DefaultPhonemeInventory();
  VTS_CHECK_ARG(inventory.size() >= 4,
                "phoneme inventory needs at least 4 entries");

  const int n_ph = static_cast<int>(inventory.size());
  const int half = n_ph / 2;
  const Lexicon lexicon = BuildSyntheticLexicon(inventory);
  std::vector<std::string> word_list;
  for (const auto& [word, phones] : lexicon.entries()) {
    word_list.push_back(word);
  }
  const int num_words = static_cast<int>(word_list.size());

  // Per-phoneme render parameters, index into `inventory`.
  std::vector<double> aperture(n_ph);
  std::vector<int> tongue_col(n_ph), tongue_height(n_ph);
  const int size = spec.frame_size;
  for (int i = 0; i < n_ph; ++i) {
    const bool onset = i < half;
    aperture[i] = LipAperture(onset ? i : i - half, onset ? half : n_ph - half,
                              onset);
    tongue_col[i] = size / 12 +
                    i * (size - size / 6 - 5) / std::max(1, n_ph - 1);
    tongue_height[i] = size / 12 + (i * 5) % (size / 3);
  }
  // Audio signatures: onsets are high tone bursts, nuclei are harmonic
  // stacks over the speaker pitch plus a fixed formant-like partial.
  std::vector<double> onset_freq(n_ph, 0.0), nucleus_mult(n_ph, 0.0),
      nucleus_formant(n_ph, 0.0);
  for (int i = 0; i < n_ph; ++i) {
    if (i < half) {
      onset_freq[i] = 2000.0 + 900.0 * (i % 6);
    } else {
      nucleus_mult[i] = 1.0 + 0.5 * (i - half);
      nucleus_formant[i] = 500.0 + 350.0 * (i - half);
    }
  }

  fs::create_directories(fs::path(spec.out_dir) / "clips");
  fs::create_directories(fs::path(spec.out_dir) / "wav");

  // Lip rectangle the renderer must respect (also the masking default).
  const MaskSpec rect = DefaultLipRegion(MaskMode::kFull, size, size);
  const double lip_center_r = (rect.row0 + rect.row1) / 2.0;
  const double lip_center_c = (rect.col0 + rect.col1) / 2.0;
  const double lip_rx = (rect.col1 - rect.col0) * 0.22;
  const double lip_ry_max = (rect.row1 - rect.row0) * 0.42;
  const int tongue_base = rect.row0 - 4;

  std::vector<ManifestEntry> entries;
  for (int s = 0; s < spec.num_speakers; ++s) {
    const std::string speaker = "spk" + std::to_string(s);
    const SpeakerStyle style = MakeStyle(spec.seed, s);
    for (int u = 0; u < spec.utterances_per_speaker; ++u) {
      Rng rng(SplitSeed(spec.seed,
                        "utt/" + speaker + "/" + std::to_string(u)));
      // First four utterances of each speaker sweep the whole word list so
      // training always covers the inventory; the rest are random.
      std::vector<std::string> words;
      const int chunk = (num_words + 3) / 4;
      if (spec.utterances_per_speaker >= 5 && u < 4 && u * chunk < num_words &&
          chunk >= 2 && chunk <= 6) {
        for (int k = u * chunk; k < std::min(num_words, (u + 1) * chunk); ++k) {
          words.push_back(word_list[k]);
        }
        if (static_cast<int>(words.size()) < 2) {
          words.push_back(word_list[static_cast<size_t>(
              rng.UniformInt(0, num_words - 1))]);
        }
      } else {
        const int nw = static_cast<int>(rng.UniformInt(2, 6));
        for (int k = 0; k < nw; ++k) {
          words.push_back(word_list[static_cast<size_t>(
              rng.UniformInt(0, num_words - 1))]);
        }
      }
      std::string transcript;
      std::vector<int> phoneme_ids;  // indices into inventory
      std::vector<int> word_sizes;
      for (const auto& w : words) {
        if (!transcript.empty()) transcript += ' ';
        transcript += w;
        int count = 0;
        for (const auto& ph : lexicon.Pronunciation(w)) {
          auto it = std::find(inventory.begin(), inventory.end(), ph);
          phoneme_ids.push_back(
              static_cast<int>(it - inventory.begin()));
          ++count;
        }
        word_sizes.push_back(count);
      }
      const int total_ph = static_cast<int>(phoneme_ids.size());

      // Video: exactly frame_span frames per phoneme, no gap frames.
      ArticulatoryClip clip;
      clip.fps = spec.fps;
      clip.speaker_id = speaker;
      clip.frames = Array({total_ph * spec.frame_span, size, size});
      clip.frames.Fill(0.08);
      const double env[2] = {0.7, 1.0};  // ramp endpoints across the span
      for (int p = 0; p < total_ph; ++p) {
        const int ph = phoneme_ids[p];
        for (int j = 0; j < spec.frame_span; ++j) {
          const int f = p * spec.frame_span + j;
          // Symmetric rise-fall over the span.
          const double x = spec.frame_span == 1
                               ? 1.0
                               : static_cast<double>(j) / (spec.frame_span - 1);
          const double e =
              env[0] + (env[1] - env[0]) * (1.0 - std::abs(2.0 * x - 1.0));
          const double gain = e * style.intensity;
          // Lip ellipse.
          const double cr = lip_center_r + style.lip_jitter_r;
          const double cc = lip_center_c + style.lip_jitter_c;
          const double ry = 2.0 + lip_ry_max * aperture[ph];
          for (int r = rect.row0; r < rect.row1; ++r) {
            for (int c = rect.col0; c < rect.col1; ++c) {
              const double dr = (r - cr) / ry;
              const double dc = (c - cc) / lip_rx;
              if (dr * dr + dc * dc <= 1.0) {
                clip.frames.at(f, r, c) =
                    std::min(1.0, clip.frames.at(f, r, c) + 0.85 * gain);
              }
            }
          }
          // Tongue bar, fully outside the lip rectangle.
          const int base = tongue_base + style.tongue_offset;
          const int top = std::max(0, base - tongue_height[ph]);
          for (int r = top; r <= base; ++r) {
            for (int c = tongue_col[ph];
                 c < std::min(size, tongue_col[ph] + 4); ++c) {
              clip.frames.at(f, r, c) =
                  std::min(1.0, clip.frames.at(f, r, c) + 0.9 * gain);
            }
          }
        }
      }

      // Audio: per-phoneme tones at the speaker tempo with short silences
      // between words.
      Waveform wav;
      wav.sample_rate = spec.sample_rate;
      const int ph_samples = static_cast<int>(std::lround(
          spec.frame_span / spec.fps * style.tempo * spec.sample_rate));
      const int gap_samples =
          static_cast<int>(std::lround(kWordGapSeconds * spec.sample_rate));
      const int ramp = spec.sample_rate / 100;  // 10 ms edges
      int consumed = 0;
      for (size_t w = 0; w < word_sizes.size(); ++w) {
        if (w > 0) wav.samples.insert(wav.samples.end(), gap_samples, 0.0);
        for (int k = 0; k < word_sizes[w]; ++k) {
          const int ph = phoneme_ids[consumed++];
          for (int n = 0; n < ph_samples; ++n) {
            const double t = static_cast<double>(n) / spec.sample_rate;
            const double edge =
                std::min({1.0, static_cast<double>(n) / ramp,
                          static_cast<double>(ph_samples - 1 - n) / ramp});
            double v = 0.02 * rng.Uniform(-1.0, 1.0);
            if (ph < half) {
              v += 0.30 * std::sin(2.0 * M_PI * onset_freq[ph] * t);
            } else {
              v += 0.22 * std::sin(2.0 * M_PI * style.base_pitch *
                                   nucleus_mult[ph] * t) +
                   0.18 * std::sin(2.0 * M_PI * nucleus_formant[ph] * t);
            }
            wav.samples.push_back(edge * v);
          }
        }
      }

      char name[64];
      std::snprintf(name, sizeof(name), "%s_utt%03d", speaker.c_str(), u);
      const std::string clip_path =
          (fs::path(spec.out_dir) / "clips" / (std::string(name) + ".clip"))
              .string();
      const std::string wav_path =
          (fs::path(spec.out_dir) / "wav" / (std::string(name) + ".wav"))
              .string();
      SaveClip(clip, clip_path);
      WriteWav(wav, wav_path);

      ManifestEntry entry;
      entry.clip_path = clip_path;
      entry.transcript = transcript;
      entry.audio_path = wav_path;
      entry.speaker_id = speaker;
      entry.split = (spec.utterances_per_speaker >= 2 &&
                     u == spec.utterances_per_speaker - 1)
                        ? "test"
                        : "train";
      entries.push_back(std::move(entry));
    }
  }

  SyntheticCorpus corpus;
  corpus.manifest = Manifest(std::move(entries));
  corpus.manifest_path =
      (fs::path(spec.out_dir) / "manifest.jsonl").string();
  corpus.lexicon_path = (fs::path(spec.out_dir) / "lexicon.txt").string();
  corpus.manifest.Save(corpus.manifest_path);
  lexicon.Save(corpus.lexicon_path);
  return corpus;
}

}  // namespace vts
