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

#ifndef VTSPEECH_EVALKIT_EVALKIT_H_
#define VTSPEECH_EVALKIT_EVALKIT_H_

#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "corpus/manifest.h"
#include "corpus/wav.h"
#include "recognizer/recognizer.h"
#include "text/lexicon.h"
#include "tts/tts.h"

namespace vts {

// One scored utterance. Error rates are fractions (0.12 = 12%), kept
// alongside the raw edit counts so pooled metrics can be re-derived.
struct EvalRow {
  std::string id;
  std::string ref;
  std::string hyp;
  int char_edits = 0;
  int char_len = 0;
  int word_edits = 0;
  int word_len = 0;
  double cer = 0.0;
  double wer = 0.0;
};

// A published result shown next to ours for context. Values are percent,
// as printed in the source table.
struct ReferenceRow {
  std::string label;
  double cer_percent = 0.0;
  double wer_percent = 0.0;
};

// Corpus-level scores pool raw counts (total edits over total reference
// length), not per-utterance averages.
struct EvalReport {
  std::string kind;
  std::vector<EvalRow> rows;
  double pooled_cer = 0.0;
  double pooled_wer = 0.0;
  long long char_edits = 0;
  long long char_len = 0;
  long long word_edits = 0;
  long long word_len = 0;
  // Checkpoint role -> config fingerprint, for every model that touched
  // this report.
  std::vector<std::pair<std::string, uint64_t>> fingerprints;
  std::vector<ReferenceRow> references;

  nlohmann::ordered_json ToJson() const;
  void WriteCsv(const std::string& path) const;
  void WriteJson(const std::string& path) const;
  // Human-readable block: pooled metrics, then the reference rows.
  std::string Summary() const;
};

// ref/hyp -> counts and rates. The reference must be non-empty.
EvalRow ScorePair(const std::string& id, const std::string& ref,
                  const std::string& hyp);

// Rows -> pooled report. `kind` tags the producing operation in the JSON.
EvalReport MakeReport(const std::string& kind, std::vector<EvalRow> rows,
                      std::vector<std::pair<std::string, uint64_t>> fingerprints,
                      std::vector<ReferenceRow> references);

// Published context rows.
std::vector<ReferenceRow> RecognitionReferences();
std::vector<ReferenceRow> MaskingReferences();
std::vector<ReferenceRow> SynthesisReferences();

struct RecognizerEvalOptions {
  std::string split = "test";
  MaskSpec mask;  // mirrors the training-time masking of the evaluated model
  DecodeOptions decode;
};

// Scores every utterance in the split: preprocess, mask, decode, segment
// into words. Throws ArgumentError when the split is empty.
EvalReport EvaluateRecognizer(const Manifest& manifest, const Recognizer& model,
                              const Lexicon& lexicon,
                              const RecognizerEvalOptions& options);

struct AblationOptions {
  std::vector<std::string> modes = {"full", "masked_lip", "lip_only"};
  std::string out_dir;  // one subdirectory per mode
  std::string eval_split = "test";
  DecodeOptions decode;
  bool quiet = true;
};

struct AblationResult {
  std::vector<std::string> modes;
  std::vector<EvalReport> reports;      // parallel to modes
  std::vector<std::string> checkpoints;  // parallel to modes
  std::string table;  // ours next to the published numbers, one mode per row
};

// Trains one recognizer per masking mode from the same config (shared
// seed), then evaluates each under its own mask.
AblationResult AblationRun(const Manifest& manifest, const Lexicon& lexicon,
                           const RecognizerConfig& config,
                           const AblationOptions& options);

struct SynthesisEvalOptions {
  double temperature = 0.0;
  uint64_t seed = 1;  // drives sampling noise when temperature > 0
  // Replaces each duration profile with seeded uniform draws on
  // [1, 2*mean]; the control arm for duration-aware scoring.
  bool scramble_durations = false;
  uint64_t scramble_seed = 97;
  DecodeOptions decode;
  std::string out_dir;  // when set, synthesized audio is kept here
};

// Synthesizes each sentence with source-speaker durations and the target
// voice, then scores the audio with a mel-input recognizer. The scorer's
// mel settings must match the target model's sample rate.
EvalReport EvaluateSynthesis(const std::vector<std::string>& sentences,
                             const TtsModel& duration_model,
                             const std::string& source_speaker,
                             const TtsModel& target_model,
                             const std::string& target_speaker,
                             const Recognizer& scorer, const Lexicon& lexicon,
                             const SynthesisEvalOptions& options);

struct SpectrogramOptions {
  int n_fft = 1024;
  int hop = 256;
  int n_mels = 80;
  int gap_px = 4;  // white separator columns between panels
};

// Side-by-side log-mel panels on a shared color scale, one per waveform,
// frequency increasing upward. Values are display units in [0,1]. Short
// waveforms are zero-padded to one analysis window.
Array RenderSpectrogramPixels(const std::vector<Waveform>& waves,
                              const SpectrogramOptions& options);

// Renders and writes the PNG; labels travel as tEXt chunks.
void SpectrogramReport(const std::vector<Waveform>& waves,
                       const std::vector<std::string>& labels,
                       const std::string& png_path,
                       const SpectrogramOptions& options);

}  // namespace vts

#endif  // VTSPEECH_EVALKIT_EVALKIT_H_
