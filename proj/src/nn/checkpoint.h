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

#ifndef VTSPEECH_NN_CHECKPOINT_H_
#define VTSPEECH_NN_CHECKPOINT_H_

#include <string>
#include <vector>

#include "json.hpp"

#include "nn/layers.h"

namespace vts {

// Checkpoint container:
//   bytes 0-7  magic "VTSCKPT1"
//   bytes 8-11 uint32 JSON header length
//   header     UTF-8 JSON: arbitrary metadata plus a "params" array of
//              {name, shape} in blob order
//   blob       float64 parameter payload, concatenated in header order
//
// The metadata carries whatever the owning model needs to rebuild itself
// (config fingerprint, step, RNG state, alphabets and so on).
void SaveCheckpoint(const std::string& path,
                    const nlohmann::ordered_json& meta,
                    const std::vector<Parameter*>& params);

// Header only; used to rebuild the model before loading weights.
nlohmann::ordered_json ReadCheckpointMeta(const std::string& path);

// Fills params (matched by order and name) from the blob. Name, count, or
// shape mismatch raises an incompatible error.
void LoadCheckpointParams(const std::string& path,
                          const std::vector<Parameter*>& params);

}  // namespace vts

#endif  // VTSPEECH_NN_CHECKPOINT_H_
