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

#ifndef VTSPEECH_TESTS_TESTUTIL_H_
#define VTSPEECH_TESTS_TESTUTIL_H_

#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "common/rng.h"
#include "nn/autodiff.h"
#include "nn/layers.h"

namespace vts {
namespace testutil {

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    char buf[64];
    std::snprintf(buf, sizeof(buf), "vts_test_%s_%d_%d", tag.c_str(),
                  static_cast<int>(::getpid()), counter++);
    path_ = std::filesystem::temp_directory_path() / buf;
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string file(const std::string& name) const {
    return (path_ / name).string();
  }

 private:
  std::filesystem::path path_;
};

// Central-difference check of every parameter gradient against the tape.
// `build` must construct a scalar loss from the store's current values and
// is re-invoked on a fresh tape for each probe. Returns the worst relative
// error; the caller asserts it is small.
inline double MaxGradRelError(ParamStore* store,
                              const std::function<Var(Tape&)>& build,
                              double h = 1e-5) {
  store->ZeroGrads();
  std::vector<Array> analytic;
  {
    Tape tape;
    Var loss = build(tape);
    tape.Backward(loss);
  }
  for (const auto& p : store->params()) analytic.push_back(p->grad);

  auto eval = [&]() {
    Tape tape;
    Var loss = build(tape);
    return tape.value(loss)[0];
  };

  double worst = 0.0;
  int pi = 0;
  for (const auto& p : store->params()) {
    for (int64_t i = 0; i < p->value.size(); ++i) {
      const double saved = p->value[i];
      p->value[i] = saved + h;
      const double up = eval();
      p->value[i] = saved - h;
      const double down = eval();
      p->value[i] = saved;
      const double fd = (up - down) / (2.0 * h);
      const double a = analytic[pi][i];
      const double denom = std::max({std::abs(a), std::abs(fd), 1e-6});
      worst = std::max(worst, std::abs(a - fd) / denom);
    }
    ++pi;
  }
  return worst;
}

// Fills a parameter with Uniform(lo, hi) draws.
inline void Randomize(Parameter* p, Rng* rng, double lo = -1.0,
                      double hi = 1.0) {
  for (int64_t i = 0; i < p->value.size(); ++i) {
    p->value[i] = rng->Uniform(lo, hi);
  }
}

// Random [t x k] log-posterior matrix with proper row normalization.
inline Array RandomLogPosteriors(int t, int k, Rng* rng) {
  Array out({t, k});
  for (int i = 0; i < t; ++i) {
    std::vector<double> logits(k);
    for (int j = 0; j < k; ++j) logits[j] = rng->Uniform(-3.0, 3.0);
    double mx = logits[0];
    for (double v : logits) mx = std::max(mx, v);
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    for (int j = 0; j < k; ++j) out.at(i, j) = logits[j] - lse;
  }
  return out;
}

}  // namespace testutil
}  // namespace vts

#endif  // VTSPEECH_TESTS_TESTUTIL_H_
