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

#include "nn/checkpoint.h"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "common/status.h"

namespace vts {

namespace {
constexpr char kCkptMagic[8] = {'V', 'T', 'S', 'C', 'K', 'P', 'T', '1'};

nlohmann::ordered_json ReadHeader(std::ifstream& in, const std::string& path) {
  char magic[8] = {};
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCkptMagic, sizeof(kCkptMagic)) != 0) {
    throw SchemaError("not a checkpoint container: " + path);
  }
  uint32_t header_len = 0;
  in.read(reinterpret_cast<char*>(&header_len), 4);
  if (!in || header_len == 0 || header_len > (1u << 26)) {
    throw SchemaError("malformed checkpoint header length: " + path);
  }
  std::string header(header_len, '\0');
  in.read(header.data(), header_len);
  if (!in) throw SchemaError("truncated checkpoint header: " + path);
  try {
    return nlohmann::ordered_json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError("invalid checkpoint header JSON: " +
                      std::string(e.what()));
  }
}
}  // namespace

void SaveCheckpoint(const std::string& path,
                    const nlohmann::ordered_json& meta,
                    const std::vector<Parameter*>& params) {
  nlohmann::ordered_json header = meta;
  nlohmann::ordered_json plist = nlohmann::ordered_json::array();
  for (const Parameter* p : params) {
    nlohmann::ordered_json rec;
    rec["name"] = p->name;
    rec["shape"] = p->value.shape();
    plist.push_back(std::move(rec));
  }
  header["params"] = std::move(plist);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint: " + path);
  const std::string header_str = header.dump();
  const uint32_t header_len = static_cast<uint32_t>(header_str.size());
  out.write(kCkptMagic, sizeof(kCkptMagic));
  out.write(reinterpret_cast<const char*>(&header_len), 4);
  out.write(header_str.data(), header_len);
  for (const Parameter* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw IoError("short write to checkpoint: " + path);
}

nlohmann::ordered_json ReadCheckpointMeta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  return ReadHeader(in, path);
}

void LoadCheckpointParams(const std::string& path,
                          const std::vector<Parameter*>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path);
  nlohmann::ordered_json header = ReadHeader(in, path);
  if (!header.contains("params") || !header["params"].is_array()) {
    throw SchemaError("checkpoint header missing params table: " + path);
  }
  const auto& plist = header["params"];
  if (plist.size() != params.size()) {
    throw IncompatibleError(
        "checkpoint holds " + std::to_string(plist.size()) +
        " parameters, model expects " + std::to_string(params.size()));
  }
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& rec = plist[i];
    const std::string name = rec.value("name", "");
    const std::vector<int> shape = rec.value("shape", std::vector<int>{});
    if (name != params[i]->name) {
      throw IncompatibleError("checkpoint parameter '" + name +
                              "' does not match model parameter '" +
                              params[i]->name + "'");
    }
    if (shape != params[i]->value.shape()) {
      throw IncompatibleError("checkpoint shape mismatch for parameter '" +
                              name + "'");
    }
    in.read(reinterpret_cast<char*>(params[i]->value.data()),
            static_cast<std::streamsize>(params[i]->value.size() *
                                         sizeof(double)));
    if (!in) throw SchemaError("truncated checkpoint blob: " + path);
  }
}

}  // namespace vts
