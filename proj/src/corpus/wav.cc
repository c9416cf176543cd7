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

#include "corpus/wav.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/status.h"

namespace vts {

namespace {
void PutU32(std::ofstream& out, uint32_t v) {
  out.write(reinterpret_cast<const char*>(&v), 4);
}
void PutU16(std::ofstream& out, uint16_t v) {
  out.write(reinterpret_cast<const char*>(&v), 2);
}
uint32_t GetU32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint16_t GetU16(std::ifstream& in) {
  uint16_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 2);
  return v;
}
}  // namespace

void WriteWav(const Waveform& wav, const std::string& path) {
  VTS_CHECK_ARG(wav.sample_rate > 0, "sample rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write wav file: " + path);
  const uint32_t data_bytes = static_cast<uint32_t>(wav.samples.size() * 2);
  out.write("RIFF", 4);
  PutU32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  PutU32(out, 16);
  PutU16(out, 1);  // PCM
  PutU16(out, 1);  // mono
  PutU32(out, static_cast<uint32_t>(wav.sample_rate));
  PutU32(out, static_cast<uint32_t>(wav.sample_rate * 2));
  PutU16(out, 2);
  PutU16(out, 16);
  out.write("data", 4);
  PutU32(out, data_bytes);
  for (double s : wav.samples) {
    const double c = std::clamp(s, -1.0, 1.0);
    const int16_t q =
        static_cast<int16_t>(std::lround(c * 32767.0));
    out.write(reinterpret_cast<const char*>(&q), 2);
  }
  if (!out) throw IoError("short write to wav file: " + path);
}

Waveform ReadWav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open wav file: " + path);
  char tag[4] = {};
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) {
    throw SchemaError("not a RIFF file: " + path);
  }
  GetU32(in);  // riff size
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) {
    throw SchemaError("not a WAVE file: " + path);
  }
  Waveform wav;
  bool have_fmt = false;
  while (in.read(tag, 4)) {
    uint32_t chunk = GetU32(in);
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      const uint16_t format = GetU16(in);
      const uint16_t channels = GetU16(in);
      wav.sample_rate = static_cast<int>(GetU32(in));
      GetU32(in);  // byte rate
      GetU16(in);  // block align
      const uint16_t bits = GetU16(in);
      if (format != 1 || channels != 1 || bits != 16) {
        throw SchemaError("only mono PCM16 wav is supported: " + path);
      }
      if (chunk > 16) in.seekg(chunk - 16, std::ios::cur);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw SchemaError("wav data before fmt chunk: " + path);
      const size_t n = chunk / 2;
      wav.samples.resize(n);
      for (size_t i = 0; i < n; ++i) {
        int16_t q = 0;
        in.read(reinterpret_cast<char*>(&q), 2);
        wav.samples[i] = q / 32767.0;
      }
      if (!in) throw SchemaError("truncated wav data: " + path);
      return wav;
    } else {
      in.seekg(chunk + (chunk & 1), std::ios::cur);
    }
  }
  throw SchemaError("wav file has no data chunk: " + path);
}

}  // namespace vts
