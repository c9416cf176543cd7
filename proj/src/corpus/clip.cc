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

#include "corpus/clip.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/status.h"

namespace vts {

namespace {
constexpr char kClipMagic[8] = {'V', 'T', 'S', 'C', 'L', 'I', 'P', '1'};

void ValidateMaskRect(const MaskSpec& spec, int height, int width) {
  VTS_CHECK_ARG(spec.row0 >= 0 && spec.row0 < spec.row1 && spec.row1 <= height,
                "lip rectangle rows outside frame bounds");
  VTS_CHECK_ARG(spec.col0 >= 0 && spec.col0 < spec.col1 && spec.col1 <= width,
                "lip rectangle cols outside frame bounds");
}

// Bilinear resize of one frame; exact copy when sizes match.
void ResizeInto(const Array& src, int frame, int src_r0, int src_c0, int src_h,
                int src_w, Array* dst, int dst_h, int dst_w) {
  if (src_h == dst_h && src_w == dst_w) {
    for (int r = 0; r < dst_h; ++r) {
      for (int c = 0; c < dst_w; ++c) {
        dst->at(frame, r, c) = src.at(frame, src_r0 + r, src_c0 + c);
      }
    }
    return;
  }
  for (int r = 0; r < dst_h; ++r) {
    double sr = (r + 0.5) * src_h / dst_h - 0.5;
    sr = std::clamp(sr, 0.0, static_cast<double>(src_h - 1));
    const int r0 = static_cast<int>(sr);
    const int r1 = std::min(r0 + 1, src_h - 1);
    const double wr = sr - r0;
    for (int c = 0; c < dst_w; ++c) {
      double sc = (c + 0.5) * src_w / dst_w - 0.5;
      sc = std::clamp(sc, 0.0, static_cast<double>(src_w - 1));
      const int c0 = static_cast<int>(sc);
      const int c1 = std::min(c0 + 1, src_w - 1);
      const double wc = sc - c0;
      const double top = (1.0 - wc) * src.at(frame, src_r0 + r0, src_c0 + c0) +
                         wc * src.at(frame, src_r0 + r0, src_c0 + c1);
      const double bot = (1.0 - wc) * src.at(frame, src_r0 + r1, src_c0 + c0) +
                         wc * src.at(frame, src_r0 + r1, src_c0 + c1);
      dst->at(frame, r, c) = (1.0 - wr) * top + wr * bot;
    }
  }
}
}  // namespace

void ValidateClip(const ArticulatoryClip& clip) {
  VTS_CHECK_ARG(clip.frames.ndim() == 3, "clip frames must be 3-D");
  VTS_CHECK_ARG(clip.num_frames() >= 1, "clip needs at least one frame");
  VTS_CHECK_ARG(clip.height() >= 8 && clip.width() >= 8,
                "clip frames must be at least 8x8");
  VTS_CHECK_ARG(clip.fps > 0.0, "clip fps must be positive");
  for (int64_t i = 0; i < clip.frames.size(); ++i) {
    const double v = clip.frames.data()[i];
    VTS_CHECK_ARG(v >= 0.0 && v <= 1.0, "clip pixels must lie in [0,1]");
  }
}

void SaveClip(const ArticulatoryClip& clip, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write clip file: " + path);
  out.write(kClipMagic, sizeof(kClipMagic));
  const uint32_t dims[3] = {static_cast<uint32_t>(clip.num_frames()),
                            static_cast<uint32_t>(clip.height()),
                            static_cast<uint32_t>(clip.width())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(&clip.fps), sizeof(double));
  std::vector<float> pixels(static_cast<size_t>(clip.frames.size()));
  for (size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = static_cast<float>(clip.frames.data()[i]);
  }
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size() * sizeof(float)));
  if (!out) throw IoError("short write to clip file: " + path);
}

ArticulatoryClip LoadClip(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open clip file: " + path);
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kClipMagic, sizeof(kClipMagic)) != 0) {
    throw SchemaError("not a clip container: " + path);
  }
  uint32_t dims[3] = {};
  double fps = 0.0;
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  in.read(reinterpret_cast<char*>(&fps), sizeof(double));
  if (!in || dims[0] == 0 || dims[1] == 0 || dims[2] == 0 || fps <= 0.0) {
    throw SchemaError("malformed clip header: " + path);
  }
  const size_t count =
      static_cast<size_t>(dims[0]) * dims[1] * dims[2];
  std::vector<float> pixels(count);
  in.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(count * sizeof(float)));
  if (!in) throw SchemaError("truncated clip payload: " + path);
  ArticulatoryClip clip;
  clip.fps = fps;
  clip.frames = Array({static_cast<int>(dims[0]), static_cast<int>(dims[1]),
                       static_cast<int>(dims[2])});
  for (size_t i = 0; i < count; ++i) {
    clip.frames.data()[i] = pixels[i];
  }
  return clip;
}

ArticulatoryClip PreprocessClip(const ArticulatoryClip& clip, int target_size,
                                double target_fps) {
  VTS_CHECK_ARG(target_size >= 8, "target size must be at least 8");
  VTS_CHECK_ARG(target_fps > 0.0, "target fps must be positive");
  const int n = clip.num_frames();
  int m = static_cast<int>(std::llround(n * target_fps / clip.fps));
  m = std::max(1, m);

  ArticulatoryClip out;
  out.fps = target_fps;
  out.speaker_id = clip.speaker_id;
  out.frames = Array({m, target_size, target_size});
  Array scratch({1, clip.height(), clip.width()});
  for (int j = 0; j < m; ++j) {
    int src = static_cast<int>(std::llround(j * clip.fps / target_fps));
    src = std::min(src, n - 1);
    for (int r = 0; r < clip.height(); ++r) {
      for (int c = 0; c < clip.width(); ++c) {
        scratch.at(0, r, c) = clip.frames.at(src, r, c);
      }
    }
    Array one({1, target_size, target_size});
    ResizeInto(scratch, 0, 0, 0, clip.height(), clip.width(), &one,
               target_size, target_size);
    for (int r = 0; r < target_size; ++r) {
      for (int c = 0; c < target_size; ++c) {
        out.frames.at(j, r, c) = std::clamp(one.at(0, r, c), 0.0, 1.0);
      }
    }
  }
  return out;
}

MaskMode MaskModeFromString(const std::string& name) {
  if (name == "full") return MaskMode::kFull;
  if (name == "lip_only") return MaskMode::kLipOnly;
  if (name == "masked_lip") return MaskMode::kMaskedLip;
  throw ArgumentError("unknown mask mode: " + name);
}

std::string MaskModeToString(MaskMode mode) {
  switch (mode) {
    case MaskMode::kFull:
      return "full";
    case MaskMode::kLipOnly:
      return "lip_only";
    case MaskMode::kMaskedLip:
      return "masked_lip";
  }
  throw ArgumentError("invalid mask mode value");
}

MaskSpec DefaultLipRegion(MaskMode mode, int height, int width) {
  MaskSpec spec;
  spec.mode = mode;
  spec.row0 = static_cast<int>(0.55 * height);
  spec.row1 = static_cast<int>(0.95 * height);
  spec.col0 = static_cast<int>(0.05 * width);
  spec.col1 = static_cast<int>(0.50 * width);
  return spec;
}

ArticulatoryClip ApplyMask(const ArticulatoryClip& clip, const MaskSpec& spec) {
  if (spec.mode == MaskMode::kFull) return clip;
  ValidateMaskRect(spec, clip.height(), clip.width());
  ArticulatoryClip out = clip;
  if (spec.mode == MaskMode::kMaskedLip) {
    for (int f = 0; f < clip.num_frames(); ++f) {
      for (int r = spec.row0; r < spec.row1; ++r) {
        for (int c = spec.col0; c < spec.col1; ++c) {
          out.frames.at(f, r, c) = 0.0;
        }
      }
    }
    return out;
  }
  // lip_only: crop, then scale the crop back up to the input resolution.
  for (int f = 0; f < clip.num_frames(); ++f) {
    ResizeInto(clip.frames, f, spec.row0, spec.col0, spec.row1 - spec.row0,
               spec.col1 - spec.col0, &out.frames, clip.height(), clip.width());
  }
  for (int64_t i = 0; i < out.frames.size(); ++i) {
    out.frames.data()[i] = std::clamp(out.frames.data()[i], 0.0, 1.0);
  }
  return out;
}

}  // namespace vts
