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

#include "nn/adam.h"

#include <cmath>

namespace vts {

Adam::Adam(std::vector<Parameter*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const Parameter* p : params_) {
    m_.emplace_back(p->value.shape());
    v_.emplace_back(p->value.shape());
  }
}

double Adam::GradNorm() const {
  double sq = 0.0;
  for (const Parameter* p : params_) {
    for (int64_t i = 0; i < p->grad.size(); ++i) {
      sq += p->grad[i] * p->grad[i];
    }
  }
  return std::sqrt(sq);
}

void Adam::Step(double lr) {
  ++step_;
  double scale = 1.0;
  if (config_.grad_clip > 0.0) {
    const double norm = GradNorm();
    if (norm > config_.grad_clip) scale = config_.grad_clip / norm;
  }
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (size_t j = 0; j < params_.size(); ++j) {
    Parameter* p = params_[j];
    Array& m = m_[j];
    Array& v = v_[j];
    for (int64_t i = 0; i < p->value.size(); ++i) {
      const double g = p->grad[i] * scale;
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      p->value[i] -= lr * mhat / (std::sqrt(vhat) + config_.eps);
    }
    p->grad.Fill(0.0);
  }
}

}  // namespace vts
