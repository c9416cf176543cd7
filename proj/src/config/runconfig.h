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

#ifndef VTSPEECH_CONFIG_RUNCONFIG_H_
#define VTSPEECH_CONFIG_RUNCONFIG_H_

#include <string>
#include <vector>

#include "corpus/synthetic.h"
#include "recognizer/recognizer.h"
#include "tts/tts.h"

namespace vts {

// Every tunable the command-line surface exposes, with working defaults.
// Scalars are settable through `section.key` paths; list-valued and derived
// fields (channel stacks, alphabets, speaker rosters) are owned by the
// commands that build the concrete models. Per-subsystem seeds are split
// from the global seed rather than set directly.
struct RunConfig {
  uint64_t seed = 20260815;
  std::string out_root = "runs";

  SyntheticCorpusSpec corpus;
  RecognizerConfig recognizer;
  TtsConfig tts;

  struct SynthesisSection {
    std::string source_speaker;
    std::string target_speaker;
    double temperature = 0.0;
  } synthesis;

  struct EvalSection {
    std::string split = "test";
    std::string mask = "full";
    bool use_beam = false;
    int beam = 16;
    double lm_weight = 0.0;
  } eval;
};

// Defaults, then $VTS_OUT_ROOT (when set) for out_root, then the file, then
// key=value overrides, in that precedence. `file_path` may be empty.
// Unknown keys and unparseable values raise SchemaError naming the key.
RunConfig ResolveConfig(const std::string& file_path,
                        const std::vector<std::string>& overrides);

// Applies one `section.key = value` setting.
void ApplySetting(RunConfig* config, const std::string& key,
                  const std::string& value);

// Canonical text form: global keys, then one block per section. Feeding the
// output back through ResolveConfig reproduces the same configuration.
std::string ConfigToText(const RunConfig& config);

// Creates `<out_root>/<name>-<stamp>` without touching existing run
// directories; a taken name gets a numeric suffix. Empty stamp means now
// (UTC, second resolution). Returns the created path.
std::string CreateRunDir(const std::string& out_root, const std::string& name,
                         const std::string& stamp = "");

}  // namespace vts

#endif  // VTSPEECH_CONFIG_RUNCONFIG_H_
