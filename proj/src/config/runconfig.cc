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

#include "config/runconfig.h"

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "common/status.h"

namespace vts {

namespace {

enum class Kind { kInt, kDouble, kString, kBool, kUint };

struct Setting {
  const char* key;
  Kind kind;
  void* target;
};

// One row per settable scalar; ConfigToText iterates this same table, so
// key order here is the canonical file order.
std::vector<Setting> Settings(RunConfig& c) {
  return {
      {"seed", Kind::kUint, &c.seed},
      {"out_root", Kind::kString, &c.out_root},
      {"corpus.speakers", Kind::kInt, &c.corpus.num_speakers},
      {"corpus.utterances_per_speaker", Kind::kInt,
       &c.corpus.utterances_per_speaker},
      {"corpus.frame_size", Kind::kInt, &c.corpus.frame_size},
      {"corpus.frame_span", Kind::kInt, &c.corpus.frame_span},
      {"corpus.fps", Kind::kDouble, &c.corpus.fps},
      {"corpus.sample_rate", Kind::kInt, &c.corpus.sample_rate},
      {"recognizer.input_type", Kind::kString, &c.recognizer.input_type},
      {"recognizer.input_size", Kind::kInt, &c.recognizer.input_size},
      {"recognizer.input_fps", Kind::kDouble, &c.recognizer.input_fps},
      {"recognizer.frontend_pool", Kind::kInt, &c.recognizer.frontend_pool},
      {"recognizer.mel_bins", Kind::kInt, &c.recognizer.mel_bins},
      {"recognizer.mel_n_fft", Kind::kInt, &c.recognizer.mel_n_fft},
      {"recognizer.mel_hop", Kind::kInt, &c.recognizer.mel_hop},
      {"recognizer.mel_sample_rate", Kind::kInt,
       &c.recognizer.mel_sample_rate},
      {"recognizer.temporal_stride", Kind::kInt,
       &c.recognizer.temporal_stride},
      {"recognizer.layers", Kind::kInt, &c.recognizer.layers},
      {"recognizer.width", Kind::kInt, &c.recognizer.width},
      {"recognizer.heads", Kind::kInt, &c.recognizer.heads},
      {"recognizer.ffn_dim", Kind::kInt, &c.recognizer.ffn_dim},
      {"recognizer.audio_feature_dim", Kind::kInt,
       &c.recognizer.audio_feature_dim},
      {"recognizer.lr_peak", Kind::kDouble, &c.recognizer.lr_peak},
      {"recognizer.warmup_fraction", Kind::kDouble,
       &c.recognizer.warmup_fraction},
      {"recognizer.total_steps", Kind::kInt, &c.recognizer.total_steps},
      {"tts.sample_rate", Kind::kInt, &c.tts.sample_rate},
      {"tts.n_fft", Kind::kInt, &c.tts.n_fft},
      {"tts.hop", Kind::kInt, &c.tts.hop},
      {"tts.n_mels", Kind::kInt, &c.tts.n_mels},
      {"tts.d_z", Kind::kInt, &c.tts.d_z},
      {"tts.prior_layers", Kind::kInt, &c.tts.prior_layers},
      {"tts.prior_width", Kind::kInt, &c.tts.prior_width},
      {"tts.prior_heads", Kind::kInt, &c.tts.prior_heads},
      {"tts.prior_ffn", Kind::kInt, &c.tts.prior_ffn},
      {"tts.posterior_channels", Kind::kInt, &c.tts.posterior_channels},
      {"tts.flow_layers", Kind::kInt, &c.tts.flow_layers},
      {"tts.flow_hidden", Kind::kInt, &c.tts.flow_hidden},
      {"tts.sdp_hidden", Kind::kInt, &c.tts.sdp_hidden},
      {"tts.speaker_dim", Kind::kInt, &c.tts.speaker_dim},
      {"tts.lr_peak", Kind::kDouble, &c.tts.lr_peak},
      {"tts.warmup_fraction", Kind::kDouble, &c.tts.warmup_fraction},
      {"tts.total_steps", Kind::kInt, &c.tts.total_steps},
      {"tts.w_recon", Kind::kDouble, &c.tts.w_recon},
      {"tts.w_kl", Kind::kDouble, &c.tts.w_kl},
      {"tts.w_dur", Kind::kDouble, &c.tts.w_dur},
      {"synthesis.source_speaker", Kind::kString,
       &c.synthesis.source_speaker},
      {"synthesis.target_speaker", Kind::kString,
       &c.synthesis.target_speaker},
      {"synthesis.temperature", Kind::kDouble, &c.synthesis.temperature},
      {"eval.split", Kind::kString, &c.eval.split},
      {"eval.mask", Kind::kString, &c.eval.mask},
      {"eval.use_beam", Kind::kBool, &c.eval.use_beam},
      {"eval.beam", Kind::kInt, &c.eval.beam},
      {"eval.lm_weight", Kind::kDouble, &c.eval.lm_weight},
  };
}

std::string Trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void ThrowType(const std::string& key, const char* want,
                            const std::string& got) {
  throw SchemaError("config key " + key + " expects " + want + ", got '" +
                    got + "'");
}

void Assign(const Setting& setting, const std::string& key,
            const std::string& value) {
  switch (setting.kind) {
    case Kind::kString:
      *static_cast<std::string*>(setting.target) = value;
      return;
    case Kind::kBool: {
      auto* target = static_cast<bool*>(setting.target);
      if (value == "true" || value == "1") {
        *target = true;
      } else if (value == "false" || value == "0") {
        *target = false;
      } else {
        ThrowType(key, "a bool (true/false)", value);
      }
      return;
    }
    case Kind::kInt: {
      size_t used = 0;
      long parsed = 0;
      try {
        parsed = std::stol(value, &used);
      } catch (const std::exception&) {
        ThrowType(key, "an integer", value);
      }
      if (used != value.size()) ThrowType(key, "an integer", value);
      *static_cast<int*>(setting.target) = static_cast<int>(parsed);
      return;
    }
    case Kind::kUint: {
      size_t used = 0;
      unsigned long long parsed = 0;
      try {
        parsed = std::stoull(value, &used);
      } catch (const std::exception&) {
        ThrowType(key, "an unsigned integer", value);
      }
      if (used != value.size() || value[0] == '-') {
        ThrowType(key, "an unsigned integer", value);
      }
      *static_cast<uint64_t*>(setting.target) = parsed;
      return;
    }
    case Kind::kDouble: {
      size_t used = 0;
      double parsed = 0.0;
      try {
        parsed = std::stod(value, &used);
      } catch (const std::exception&) {
        ThrowType(key, "a number", value);
      }
      if (used != value.size()) ThrowType(key, "a number", value);
      *static_cast<double*>(setting.target) = parsed;
      return;
    }
  }
  throw InternalError("unhandled setting kind");
}

std::string Render(const Setting& setting) {
  char buf[64];
  switch (setting.kind) {
    case Kind::kString:
      return *static_cast<std::string*>(setting.target);
    case Kind::kBool:
      return *static_cast<bool*>(setting.target) ? "true" : "false";
    case Kind::kInt:
      std::snprintf(buf, sizeof(buf), "%d",
                    *static_cast<int*>(setting.target));
      return buf;
    case Kind::kUint:
      std::snprintf(buf, sizeof(buf), "%llu",
                    static_cast<unsigned long long>(
                        *static_cast<uint64_t*>(setting.target)));
      return buf;
    case Kind::kDouble:
      // %.17g survives a text round trip bit-exactly.
      std::snprintf(buf, sizeof(buf), "%.17g",
                    *static_cast<double*>(setting.target));
      return buf;
  }
  throw InternalError("unhandled setting kind");
}

void ApplyFile(RunConfig* config, const std::string& path) {
  std::ifstream f(path);
  if (!f) throw IoError("cannot read config file: " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3) {
        throw SchemaError(path + ":" + std::to_string(lineno) +
                          ": malformed section header '" + t + "'");
      }
      section = Trim(t.substr(1, t.size() - 2));
      continue;
    }
    const size_t eq = t.find('=');
    if (eq == std::string::npos) {
      throw SchemaError(path + ":" + std::to_string(lineno) +
                        ": expected key = value, got '" + t + "'");
    }
    const std::string key = Trim(t.substr(0, eq));
    const std::string value = Trim(t.substr(eq + 1));
    ApplySetting(config,
                 section.empty() ? key : section + "." + key, value);
  }
}

}  // namespace

void ApplySetting(RunConfig* config, const std::string& key,
                  const std::string& value) {
  for (const Setting& setting : Settings(*config)) {
    if (key == setting.key) {
      Assign(setting, key, value);
      return;
    }
  }
  throw SchemaError("unknown config key: " + key);
}

RunConfig ResolveConfig(const std::string& file_path,
                        const std::vector<std::string>& overrides) {
  RunConfig config;
  if (const char* root = std::getenv("VTS_OUT_ROOT")) {
    if (root[0] != '\0') config.out_root = root;
  }
  if (!file_path.empty()) ApplyFile(&config, file_path);
  for (const std::string& item : overrides) {
    const size_t eq = item.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw SchemaError("override must look like section.key=value, got '" +
                        item + "'");
    }
    ApplySetting(&config, Trim(item.substr(0, eq)), Trim(item.substr(eq + 1)));
  }
  return config;
}

std::string ConfigToText(const RunConfig& config) {
  std::ostringstream out;
  std::string section;
  // Settings() only reads through the pointers here.
  for (const Setting& setting : Settings(const_cast<RunConfig&>(config))) {
    const std::string key = setting.key;
    const size_t dot = key.find('.');
    const std::string want = dot == std::string::npos ? "" : key.substr(0, dot);
    if (want != section) {
      section = want;
      out << "\n[" << section << "]\n";
    }
    out << (dot == std::string::npos ? key : key.substr(dot + 1)) << " = "
        << Render(setting) << "\n";
  }
  return out.str();
}

std::string CreateRunDir(const std::string& out_root, const std::string& name,
                         const std::string& stamp) {
  VTS_CHECK_ARG(!out_root.empty(), "run directory needs an output root");
  VTS_CHECK_ARG(!name.empty(), "run directory needs a name");
  std::string when = stamp;
  if (when.empty()) {
    const std::time_t now = std::time(nullptr);
    std::tm utc{};
    gmtime_r(&now, &utc);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y%m%d-%H%M%S", &utc);
    when = buf;
  }
  const std::filesystem::path base =
      std::filesystem::path(out_root) / (name + "-" + when);
  std::filesystem::path dir = base;
  for (int suffix = 1; std::filesystem::exists(dir); ++suffix) {
    dir = base;
    dir += "-" + std::to_string(suffix);
  }
  std::filesystem::create_directories(dir);
  return dir.string();
}

}  // namespace vts
