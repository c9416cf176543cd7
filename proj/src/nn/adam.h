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

#ifndef VTSPEECH_NN_ADAM_H_
#define VTSPEECH_NN_ADAM_H_

#include <vector>

#include "nn/autodiff.h"

namespace vts {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.98;
  double eps = 1e-9;
  double grad_clip = 5.0;  // global-norm clip; <= 0 disables
};

// Standard bias-corrected Adam over a fixed parameter list. Consumes and
// clears parameter gradients on every step.
class Adam {
 public:
  Adam(std::vector<Parameter*> params, AdamConfig config = {});

  void Step(double lr);
  int64_t step_count() const { return step_; }
  // Global L2 norm of the current gradients, before clipping.
  double GradNorm() const;

 private:
  std::vector<Parameter*> params_;
  AdamConfig config_;
  std::vector<Array> m_;
  std::vector<Array> v_;
  int64_t step_ = 0;
};

}  // namespace vts

#endif  // VTSPEECH_NN_ADAM_H_
