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

#ifndef VTSPEECH_CORPUS_MANIFEST_H_
#define VTSPEECH_CORPUS_MANIFEST_H_

#include <map>
#include <string>
#include <vector>

#include "corpus/clip.h"
#include "corpus/wav.h"

namespace vts {

struct ManifestEntry {
  std::string clip_path;
  std::string transcript;
  std::string audio_path;
  std::string speaker_id;
  std::string split;  // "train" or "test"
};

// Utterance list backing both trainers. Serialized as JSON lines with the
// fields of ManifestEntry exactly; media paths are stored relative to the
// manifest file and resolved at load time.
class Manifest {
 public:
  Manifest() = default;
  explicit Manifest(std::vector<ManifestEntry> entries)
      : entries_(std::move(entries)) {}

  // Validates schema line by line, resolves and checks media paths.
  static Manifest Load(const std::string& path);
  void Save(const std::string& path) const;

  const std::vector<ManifestEntry>& entries() const { return entries_; }
  std::vector<ManifestEntry>& entries() { return entries_; }

  std::vector<const ManifestEntry*> SplitEntries(const std::string& split) const;
  std::vector<std::string> Speakers() const;  // sorted unique
  std::map<std::string, double> PerSpeakerTestFraction() const;

 private:
  std::vector<ManifestEntry> entries_;
};

// Paired media for one manifest entry; checks the audio/video duration
// agreement invariant (within 20 percent) and transcript non-emptiness.
struct Utterance {
  ArticulatoryClip clip;
  std::string transcript;
  Waveform waveform;
  std::string speaker_id;
};

Utterance LoadUtterance(const ManifestEntry& entry);

}  // namespace vts

#endif  // VTSPEECH_CORPUS_MANIFEST_H_
