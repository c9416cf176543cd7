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

#ifndef VTSPEECH_CORPUS_SYNTHETIC_H_
#define VTSPEECH_CORPUS_SYNTHETIC_H_

#include <cstdint>
#include <string>
#include <vector>

#include "corpus/manifest.h"
#include "text/lexicon.h"

namespace vts {

// Deterministic articulatory-video + audio corpus. Words pair an onset from
// the first half of the phoneme inventory with a nucleus from the second
// half. Phonemes render as geometric articulator patterns: a lip ellipse
// inside the default lip rectangle whose aperture is SHARED between inventory
// neighbors (2k and 2k+1 within each half), and a tongue bar outside the
// rectangle that is unique per phoneme. Cropping to the lips therefore loses
// information that the tongue bar retains, which drives the masking ablation.
struct SyntheticCorpusSpec {
  uint64_t seed = 1234;
  int num_speakers = 3;
  int utterances_per_speaker = 10;
  std::vector<std::string> phoneme_inventory;  // empty -> default inventory
  int frame_span = 6;   // video frames per phoneme
  double fps = 25.0;
  int frame_size = 96;
  int sample_rate = 16000;
  std::string out_dir;
};

struct SyntheticCorpus {
  Manifest manifest;  // entries hold resolved absolute paths
  std::string manifest_path;
  std::string lexicon_path;
};

// {K, T, P, S} onsets and {AA, EH, IY, UW} nuclei.
std::vector<std::string> DefaultPhonemeInventory();

// One entry per onset-nucleus pair; word string is the lowercased
// concatenation of its phonemes.
Lexicon BuildSyntheticLexicon(const std::vector<std::string>& inventory);

// Writes clips/, wav/, lexicon.txt and manifest.jsonl under spec.out_dir.
// Byte-identical output for identical specs. The final utterance of each
// speaker is assigned to the test split (when it has at least two).
SyntheticCorpus GenerateSyntheticCorpus(const SyntheticCorpusSpec& spec);

}  // namespace vts

#endif  // VTSPEECH_CORPUS_SYNTHETIC_H_
