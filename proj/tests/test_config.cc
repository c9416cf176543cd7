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

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "common/status.h"
#include "config/runconfig.h"
#include "testutil.h"

using namespace vts;
using namespace vts::testutil;

TEST_CASE("defaults resolve without a file and honor the env root") {
  unsetenv("VTS_OUT_ROOT");
  const RunConfig config = ResolveConfig("", {});
  CHECK(config.seed == 20260815u);
  CHECK(config.out_root == "runs");
  CHECK(config.recognizer.lr_peak == 0.001);
  CHECK(config.eval.split == "test");

  setenv("VTS_OUT_ROOT", "/tmp/elsewhere", 1);
  CHECK(ResolveConfig("", {}).out_root == "/tmp/elsewhere");
  // An explicit override still wins over the environment.
  CHECK(ResolveConfig("", {"out_root=mine"}).out_root == "mine");
  unsetenv("VTS_OUT_ROOT");
}

TEST_CASE("file then overrides, in that precedence") {
  TempDir dir("config");
  const std::string path = dir.file("run.cfg");
  {
    std::ofstream f(path);
    f << "# comment line\n"
      << "seed = 99\n"
      << "\n"
      << "[recognizer]\n"
      << "lr_peak = 0.002\n"
      << "total_steps = 50\n"
      << "[synthesis]\n"
      << "source_speaker = spk1\n";
  }
  const RunConfig config =
      ResolveConfig(path, {"recognizer.lr_peak=0.005", "eval.beam=4"});
  CHECK(config.seed == 99u);
  CHECK(config.recognizer.lr_peak == 0.005);  // override beats file
  CHECK(config.recognizer.total_steps == 50);
  CHECK(config.synthesis.source_speaker == "spk1");
  CHECK(config.eval.beam == 4);
  CHECK(config.tts.hop == 256);  // untouched default
}

TEST_CASE("unknown keys and bad values are named in the error") {
  RunConfig config;
  CHECK_THROWS_WITH_AS(ApplySetting(&config, "recognizer.lr_peek", "0.1"),
                       "unknown config key: recognizer.lr_peek", SchemaError);
  CHECK_THROWS_WITH_AS(
      ApplySetting(&config, "recognizer.lr_peak", "abc"),
      "config key recognizer.lr_peak expects a number, got 'abc'",
      SchemaError);
  CHECK_THROWS_AS(ApplySetting(&config, "recognizer.total_steps", "12.5"),
                  SchemaError);
  CHECK_THROWS_AS(ApplySetting(&config, "eval.use_beam", "maybe"),
                  SchemaError);
  CHECK_THROWS_AS(ApplySetting(&config, "seed", "-3"), SchemaError);
  CHECK_NOTHROW(ApplySetting(&config, "eval.use_beam", "1"));
  CHECK(config.eval.use_beam);

  CHECK_THROWS_AS(ResolveConfig("", {"no_equals_sign"}), SchemaError);

  TempDir dir("badcfg");
  const std::string path = dir.file("bad.cfg");
  {
    std::ofstream f(path);
    f << "[recognizer\n";
  }
  CHECK_THROWS_AS(ResolveConfig(path, {}), SchemaError);
  CHECK_THROWS_AS(ResolveConfig(dir.file("missing.cfg"), {}), IoError);
}

TEST_CASE("canonical text round-trips the resolved config") {
  RunConfig config = ResolveConfig(
      "", {"seed=7", "tts.lr_peak=0.00012999999999999999", "eval.mask=lip_only",
           "corpus.fps=12.5", "synthesis.target_speaker=clean"});
  const std::string text = ConfigToText(config);
  CHECK(text.find("[tts]") != std::string::npos);
  CHECK(text.find("mask = lip_only") != std::string::npos);

  TempDir dir("cfgrt");
  const std::string path = dir.file("echo.cfg");
  {
    std::ofstream f(path);
    f << text;
  }
  const RunConfig back = ResolveConfig(path, {});
  CHECK(ConfigToText(back) == text);
  CHECK(back.seed == 7u);
  CHECK(back.tts.lr_peak == config.tts.lr_peak);
  CHECK(back.corpus.fps == 12.5);
}

TEST_CASE("run directories are append-only and collision-safe") {
  TempDir dir("rundir");
  const std::string a = CreateRunDir(dir.file("root"), "eval", "20260101-000000");
  const std::string b = CreateRunDir(dir.file("root"), "eval", "20260101-000000");
  const std::string c = CreateRunDir(dir.file("root"), "eval", "20260101-000000");
  CHECK(std::filesystem::is_directory(a));
  CHECK(a != b);
  CHECK(b != c);
  CHECK(a.find("eval-20260101-000000") != std::string::npos);
  CHECK(b.find("-1") != std::string::npos);

  // Current-time stamps also produce a directory.
  const std::string now = CreateRunDir(dir.file("root"), "train");
  CHECK(std::filesystem::is_directory(now));

  CHECK_THROWS_AS(CreateRunDir("", "eval", "x"), ArgumentError);
  CHECK_THROWS_AS(CreateRunDir(dir.file("root"), "", "x"), ArgumentError);
}
