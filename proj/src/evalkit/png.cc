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

#include "evalkit/png.h"

#include <zlib.h>

#include <cmath>
#include <cstdint>
#include <fstream>

#include "common/status.h"

namespace vts {

namespace {

void PutU32(std::vector<unsigned char>* out, uint32_t v) {
  out->push_back(static_cast<unsigned char>((v >> 24) & 0xff));
  out->push_back(static_cast<unsigned char>((v >> 16) & 0xff));
  out->push_back(static_cast<unsigned char>((v >> 8) & 0xff));
  out->push_back(static_cast<unsigned char>(v & 0xff));
}

// length + type + data + CRC over (type + data), per the PNG chunk layout.
void PutChunk(std::vector<unsigned char>* out, const char type[4],
              const std::vector<unsigned char>& data) {
  PutU32(out, static_cast<uint32_t>(data.size()));
  const size_t crc_start = out->size();
  out->insert(out->end(), type, type + 4);
  out->insert(out->end(), data.begin(), data.end());
  const uLong crc = crc32(crc32(0L, Z_NULL, 0), out->data() + crc_start,
                          static_cast<uInt>(4 + data.size()));
  PutU32(out, static_cast<uint32_t>(crc));
}

}  // namespace

std::vector<unsigned char> EncodePngGray8(
    const Array& pixels, const std::vector<std::string>& labels) {
  VTS_CHECK_ARG(pixels.ndim() == 2, "png pixels must be [height x width]");
  const int height = pixels.dim(0);
  const int width = pixels.dim(1);
  VTS_CHECK_ARG(height > 0 && width > 0, "png needs at least one pixel");

  // Filter byte 0 (None) before every scanline.
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<size_t>(height) * (width + 1));
  for (int r = 0; r < height; ++r) {
    raw.push_back(0);
    for (int c = 0; c < width; ++c) {
      double v = pixels.at(r, c);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  uLongf bound = compressBound(static_cast<uLong>(raw.size()));
  std::vector<unsigned char> packed(bound);
  if (compress2(packed.data(), &bound, raw.data(),
                static_cast<uLong>(raw.size()), 9) != Z_OK) {
    throw InternalError("png deflate failed");
  }
  packed.resize(bound);

  std::vector<unsigned char> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  std::vector<unsigned char> ihdr;
  PutU32(&ihdr, static_cast<uint32_t>(width));
  PutU32(&ihdr, static_cast<uint32_t>(height));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(0);  // grayscale
  ihdr.push_back(0);  // deflate
  ihdr.push_back(0);  // adaptive filtering
  ihdr.push_back(0);  // no interlace
  PutChunk(&out, "IHDR", ihdr);
  for (const auto& label : labels) {
    std::vector<unsigned char> text;
    const char* keyword = "Label";
    text.insert(text.end(), keyword, keyword + 5);
    text.push_back(0);
    text.insert(text.end(), label.begin(), label.end());
    PutChunk(&out, "tEXt", text);
  }
  PutChunk(&out, "IDAT", packed);
  PutChunk(&out, "IEND", {});
  return out;
}

void WritePngGray8(const std::string& path, const Array& pixels,
                   const std::vector<std::string>& labels) {
  const std::vector<unsigned char> bytes = EncodePngGray8(pixels, labels);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write png: " + path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("short write on png: " + path);
}

}  // namespace vts
