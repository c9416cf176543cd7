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

#include "corpus/manifest.h"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>

#include "json.hpp"

#include "common/status.h"
#include "text/normalize.h"

namespace vts {

namespace fs = std::filesystem;

namespace {
const std::set<std::string> kFields = {"clip_path", "transcript", "audio_path",
                                       "speaker_id", "split"};

std::string ResolveAgainst(const fs::path& base_dir, const std::string& p) {
  fs::path path(p);
  if (path.is_absolute()) return path.string();
  return (base_dir / path).lexically_normal().string();
}
}  // namespace

Manifest Manifest::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  const fs::path base_dir = fs::path(path).parent_path();

  Manifest manifest;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json rec;
    try {
      rec = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError("manifest line " + std::to_string(lineno) +
                        ": invalid JSON (" + e.what() + ")");
    }
    if (!rec.is_object()) {
      throw SchemaError("manifest line " + std::to_string(lineno) +
                        ": record must be a JSON object");
    }
    for (const auto& field : kFields) {
      if (!rec.contains(field) || !rec[field].is_string()) {
        throw SchemaError("manifest line " + std::to_string(lineno) +
                          ": missing string field '" + field + "'");
      }
    }
    for (const auto& [key, value] : rec.items()) {
      if (!kFields.count(key)) {
        throw SchemaError("manifest line " + std::to_string(lineno) +
                          ": unknown field '" + key + "'");
      }
    }
    ManifestEntry entry;
    entry.clip_path = ResolveAgainst(base_dir, rec["clip_path"]);
    entry.transcript = rec["transcript"];
    entry.audio_path = ResolveAgainst(base_dir, rec["audio_path"]);
    entry.speaker_id = rec["speaker_id"];
    entry.split = rec["split"];
    if (entry.split != "train" && entry.split != "test") {
      throw SchemaError("manifest line " + std::to_string(lineno) +
                        ": split must be 'train' or 'test', got '" +
                        entry.split + "'");
    }
    if (!fs::exists(entry.clip_path)) {
      throw IoError("manifest line " + std::to_string(lineno) +
                    ": clip_path not found: " + entry.clip_path);
    }
    if (!fs::exists(entry.audio_path)) {
      throw IoError("manifest line " + std::to_string(lineno) +
                    ": audio_path not found: " + entry.audio_path);
    }
    manifest.entries_.push_back(std::move(entry));
  }
  if (manifest.entries_.empty()) {
    throw SchemaError("empty manifest: " + path);
  }
  return manifest;
}

void Manifest::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write manifest: " + path);
  const fs::path base_dir = fs::path(path).parent_path();
  for (const auto& e : entries_) {
    nlohmann::ordered_json rec;
    // Paths under the manifest directory are stored relative for
    // relocatable corpora.
    rec["clip_path"] = fs::path(e.clip_path)
                           .lexically_proximate(base_dir)
                           .generic_string();
    rec["transcript"] = e.transcript;
    rec["audio_path"] = fs::path(e.audio_path)
                            .lexically_proximate(base_dir)
                            .generic_string();
    rec["speaker_id"] = e.speaker_id;
    rec["split"] = e.split;
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("short write to manifest: " + path);
}

std::vector<const ManifestEntry*> Manifest::SplitEntries(
    const std::string& split) const {
  std::vector<const ManifestEntry*> out;
  for (const auto& e : entries_) {
    if (e.split == split) out.push_back(&e);
  }
  return out;
}

std::vector<std::string> Manifest::Speakers() const {
  std::set<std::string> ids;
  for (const auto& e : entries_) ids.insert(e.speaker_id);
  return {ids.begin(), ids.end()};
}

std::map<std::string, double> Manifest::PerSpeakerTestFraction() const {
  std::map<std::string, int> total;
  std::map<std::string, int> test;
  for (const auto& e : entries_) {
    ++total[e.speaker_id];
    if (e.split == "test") ++test[e.speaker_id];
  }
  std::map<std::string, double> frac;
  for (const auto& [id, n] : total) {
    frac[id] = static_cast<double>(test[id]) / n;
  }
  return frac;
}

Utterance LoadUtterance(const ManifestEntry& entry) {
  Utterance utt;
  utt.clip = LoadClip(entry.clip_path);
  utt.clip.speaker_id = entry.speaker_id;
  utt.transcript = entry.transcript;
  utt.waveform = ReadWav(entry.audio_path);
  utt.speaker_id = entry.speaker_id;
  NormalizeText(entry.transcript);  // throws if empty after normalization
  const double clip_dur = utt.clip.duration_seconds();
  const double audio_dur = utt.waveform.duration_seconds();
  if (audio_dur < 0.8 * clip_dur || audio_dur > 1.2 * clip_dur) {
    throw SchemaError("audio/video duration mismatch beyond 20% for clip " +
                      entry.clip_path);
  }
  return utt;
}

}  // namespace vts
