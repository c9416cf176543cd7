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

#ifndef VTSPEECH_SYNTHESIS_SYNTHESIS_H_
#define VTSPEECH_SYNTHESIS_SYNTHESIS_H_

#include <string>
#include <vector>

#include "recognizer/recognizer.h"
#include "tts/tts.h"

namespace vts {

// Per-position phoneme timing; positions include word-boundary tokens.
struct DurationProfile {
  std::vector<std::string> phonemes;
  std::vector<int> frames;  // mel frames, each >= 1

  int TotalFrames() const;
};

// Phonemizes the text and samples one duration per position from the
// model's duration predictor in the given speaker's voice. Temperature 0
// takes the deterministic mode path.
DurationProfile ExtractSourceDurations(const TtsModel& model,
                                       const Lexicon& lexicon,
                                       const std::string& text,
                                       const std::string& speaker_id,
                                       double temperature, Rng* rng);

struct SynthesisResult {
  Waveform waveform;
  DurationProfile durations;
};

// Full single-model path: durations and voice both come from `model`.
// The waveform is exactly hop * total frames samples long.
SynthesisResult SynthesizeSameSpeaker(const TtsModel& model,
                                      const Lexicon& lexicon,
                                      const std::string& text,
                                      const std::string& speaker_id,
                                      double temperature, Rng* rng);

// Renders `text` with the target model's voice while keeping the source
// speaker's timing: durations are sampled from duration_model and the
// latents, flow and decoder all come from target_model. The two models must
// share a phoneme alphabet. Swapping the target changes the audio but not
// the duration profile.
SynthesisResult TransplantSynthesize(const TtsModel& duration_model,
                                     const std::string& source_speaker,
                                     const TtsModel& target_model,
                                     const std::string& target_speaker,
                                     const Lexicon& lexicon,
                                     const std::string& text,
                                     double temperature, Rng* rng);

// Renders text in the target voice under an explicit externally supplied
// duration profile (one entry per phoneme position).
SynthesisResult SynthesizeWithDurations(const TtsModel& target_model,
                                        const std::string& target_speaker,
                                        const Lexicon& lexicon,
                                        const std::string& text,
                                        const std::vector<int>& frames,
                                        double temperature, Rng* rng);

struct EndToEndResult {
  std::string text;
  DurationProfile durations;
  Waveform waveform;
};

// Silent clip -> transcript -> transplant synthesis. An empty transcription
// is an explicit error rather than silent output.
EndToEndResult EndToEndSynthesize(const ArticulatoryClip& clip,
                                  const Recognizer& recognizer,
                                  const DecodeOptions& decode,
                                  const TtsModel& duration_model,
                                  const std::string& source_speaker,
                                  const TtsModel& target_model,
                                  const std::string& target_speaker,
                                  const Lexicon& lexicon, double temperature,
                                  Rng* rng);

// Writes out.wav, transcript.txt and durations.csv (phoneme,frames) into an
// existing directory.
void WriteSynthesisBundle(const std::string& dir, const std::string& text,
                          const SynthesisResult& result);

}  // namespace vts

#endif  // VTSPEECH_SYNTHESIS_SYNTHESIS_H_
