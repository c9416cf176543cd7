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

#include "synthesis/synthesis.h"

#include <fstream>

#include "common/status.h"
#include "text/normalize.h"

namespace vts {

int DurationProfile::TotalFrames() const {
  int total = 0;
  for (int f : frames) total += f;
  return total;
}

namespace {

std::vector<std::string> PhonemizeForTts(const TtsModel& model,
                                         const Lexicon& lexicon,
                                         const std::string& text) {
  std::vector<std::string> phonemes =
      lexicon.Phonemize(NormalizeText(text), /*with_boundaries=*/true);
  // Surface an alphabet gap as the caller's problem, not an index error.
  for (const auto& p : phonemes) {
    if (!model.config().alphabet.Contains(p)) {
      throw IncompatibleError("phoneme " + p +
                              " is missing from the model alphabet");
    }
  }
  return phonemes;
}

// Shared tail: expand the prior by the durations, cross the flow backwards
// and decode. `temperature` scales the prior noise; 0 keeps the means.
Waveform RenderWithDurations(const TtsModel& model, int speaker_index,
                             const PriorOutput& prior,
                             const std::vector<int>& frames,
                             double temperature, Rng* rng) {
  VTS_CHECK_ARG(temperature >= 0.0, "temperature must be non-negative");
  VTS_CHECK_ARG(temperature == 0.0 || rng != nullptr,
                "sampling with temperature > 0 needs an rng");
  Array z = ExpandByDurations(prior.params.mu, frames);
  if (temperature > 0.0) {
    Array std_exp = ExpandByDurations(prior.params.log_std, frames);
    for (int i = 0; i < z.size(); ++i) {
      z[i] += temperature * std::exp(std_exp[i]) * rng->Normal();
    }
  }
  Array latents = model.FlowInverseValues(z, speaker_index);
  return model.DecodeWaveformValues(latents, speaker_index);
}

}  // namespace

DurationProfile ExtractSourceDurations(const TtsModel& model,
                                       const Lexicon& lexicon,
                                       const std::string& text,
                                       const std::string& speaker_id,
                                       double temperature, Rng* rng) {
  const int speaker = model.SpeakerIndex(speaker_id);
  DurationProfile profile;
  profile.phonemes = PhonemizeForTts(model, lexicon, text);
  PriorOutput prior = model.PriorEncodeValues(
      model.config().alphabet.Encode(profile.phonemes), speaker);
  profile.frames = model.SdpSample(prior.hiddens, speaker, temperature, rng);
  return profile;
}

SynthesisResult SynthesizeSameSpeaker(const TtsModel& model,
                                      const Lexicon& lexicon,
                                      const std::string& text,
                                      const std::string& speaker_id,
                                      double temperature, Rng* rng) {
  const int speaker = model.SpeakerIndex(speaker_id);
  SynthesisResult out;
  out.durations.phonemes = PhonemizeForTts(model, lexicon, text);
  PriorOutput prior = model.PriorEncodeValues(
      model.config().alphabet.Encode(out.durations.phonemes), speaker);
  out.durations.frames =
      model.SdpSample(prior.hiddens, speaker, temperature, rng);
  out.waveform = RenderWithDurations(model, speaker, prior,
                                     out.durations.frames, temperature, rng);
  return out;
}

SynthesisResult TransplantSynthesize(const TtsModel& duration_model,
                                     const std::string& source_speaker,
                                     const TtsModel& target_model,
                                     const std::string& target_speaker,
                                     const Lexicon& lexicon,
                                     const std::string& text,
                                     double temperature, Rng* rng) {
  if (!(duration_model.config().alphabet == target_model.config().alphabet)) {
    throw IncompatibleError(
        "duration and target models use different phoneme alphabets");
  }
  SynthesisResult out;
  out.durations = ExtractSourceDurations(duration_model, lexicon, text,
                                         source_speaker, temperature, rng);
  const int target = target_model.SpeakerIndex(target_speaker);
  PriorOutput prior = target_model.PriorEncodeValues(
      target_model.config().alphabet.Encode(out.durations.phonemes), target);
  out.waveform = RenderWithDurations(target_model, target, prior,
                                     out.durations.frames, temperature, rng);
  return out;
}

SynthesisResult SynthesizeWithDurations(const TtsModel& target_model,
                                        const std::string& target_speaker,
                                        const Lexicon& lexicon,
                                        const std::string& text,
                                        const std::vector<int>& frames,
                                        double temperature, Rng* rng) {
  const int target = target_model.SpeakerIndex(target_speaker);
  SynthesisResult out;
  out.durations.phonemes = PhonemizeForTts(target_model, lexicon, text);
  VTS_CHECK_ARG(frames.size() == out.durations.phonemes.size(),
                "one duration per phoneme position required");
  out.durations.frames = frames;
  PriorOutput prior = target_model.PriorEncodeValues(
      target_model.config().alphabet.Encode(out.durations.phonemes), target);
  out.waveform = RenderWithDurations(target_model, target, prior,
                                     out.durations.frames, temperature, rng);
  return out;
}

EndToEndResult EndToEndSynthesize(const ArticulatoryClip& clip,
                                  const Recognizer& recognizer,
                                  const DecodeOptions& decode,
                                  const TtsModel& duration_model,
                                  const std::string& source_speaker,
                                  const TtsModel& target_model,
                                  const std::string& target_speaker,
                                  const Lexicon& lexicon, double temperature,
                                  Rng* rng) {
  EndToEndResult out;
  out.text = Transcribe(clip, recognizer, lexicon, decode);
  if (out.text.empty()) {
    throw EmptyTranscriptError("recognizer produced an empty transcription");
  }
  SynthesisResult synth =
      TransplantSynthesize(duration_model, source_speaker, target_model,
                           target_speaker, lexicon, out.text, temperature, rng);
  out.durations = std::move(synth.durations);
  out.waveform = std::move(synth.waveform);
  return out;
}

void WriteSynthesisBundle(const std::string& dir, const std::string& text,
                          const SynthesisResult& result) {
  WriteWav(result.waveform, dir + "/out.wav");
  {
    std::ofstream f(dir + "/transcript.txt");
    if (!f) throw IoError("cannot write " + dir + "/transcript.txt");
    f << text << "\n";
  }
  std::ofstream f(dir + "/durations.csv");
  if (!f) throw IoError("cannot write " + dir + "/durations.csv");
  f << "phoneme,frames\n";
  for (size_t i = 0; i < result.durations.phonemes.size(); ++i) {
    f << result.durations.phonemes[i] << "," << result.durations.frames[i]
      << "\n";
  }
}

}  // namespace vts
