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

#ifndef VTSPEECH_CORPUS_CLIP_H_
#define VTSPEECH_CORPUS_CLIP_H_

#include <string>

#include "nn/array.h"

namespace vts {

// Grayscale articulator video. Pixels live in [0,1]; frames is
// [num_frames x height x width].
struct ArticulatoryClip {
  Array frames;
  double fps = 25.0;
  std::string speaker_id;

  int num_frames() const { return frames.dim(0); }
  int height() const { return frames.dim(1); }
  int width() const { return frames.dim(2); }
  double duration_seconds() const { return num_frames() / fps; }
};

// Throws if pixel range, frame count, or minimum size are violated.
void ValidateClip(const ArticulatoryClip& clip);

// Little-endian binary clip container:
//   bytes 0-7   magic "VTSCLIP1"
//   bytes 8-19  uint32 num_frames, uint32 height, uint32 width
//   bytes 20-27 float64 fps
//   then num_frames*height*width float32 pixels, frame-major row-major.
void SaveClip(const ArticulatoryClip& clip, const std::string& path);
ArticulatoryClip LoadClip(const std::string& path);

// Nearest-frame temporal resampling to target_fps (output frame j reads
// source frame round(j * fps / target_fps), clamped) plus bilinear spatial
// resize to target_size x target_size. Output frame count is
// round(num_frames * target_fps / fps). A clip already at the target
// settings passes through frame-identical.
ArticulatoryClip PreprocessClip(const ArticulatoryClip& clip, int target_size,
                                double target_fps);

enum class MaskMode { kFull, kLipOnly, kMaskedLip };

// Pixel-unit half-open rectangle [row0,row1) x [col0,col1) framing the lips.
struct MaskSpec {
  MaskMode mode = MaskMode::kFull;
  int row0 = 0, row1 = 0, col0 = 0, col1 = 0;
};

MaskMode MaskModeFromString(const std::string& name);
std::string MaskModeToString(MaskMode mode);

// Lower-front quadrant: rows [0.55H, 0.95H), cols [0.05W, 0.50W).
MaskSpec DefaultLipRegion(MaskMode mode, int height, int width);

// full: identity. lip_only: crop the rectangle, resize back to the input
// resolution. masked_lip: zero the rectangle.
ArticulatoryClip ApplyMask(const ArticulatoryClip& clip, const MaskSpec& spec);

}  // namespace vts

#endif  // VTSPEECH_CORPUS_CLIP_H_
