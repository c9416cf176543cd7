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

#ifndef VTSPEECH_NN_AUTODIFF_H_
#define VTSPEECH_NN_AUTODIFF_H_

#include <functional>
#include <string>
#include <vector>

#include "nn/array.h"

namespace vts {

// Trainable tensor living outside any tape. Gradients accumulate across
// tape runs until the optimizer consumes and clears them.
struct Parameter {
  std::string name;
  Array value;
  Array grad;

  explicit Parameter(std::string n, Array v)
      : name(std::move(n)), value(std::move(v)) {
    grad = Array(value.shape());
  }
};

class Tape;

// Handle into a tape; cheap to copy, valid until the tape is destroyed.
struct Var {
  int id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode tape. Nodes are appended in forward order; Backward walks
// them in reverse, so parents always precede children. One tape per
// training step; parameters persist outside it.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Leaves.
  Var Constant(Array value);           // no gradient tracked
  Var Param(Parameter* p);             // gradient flushed to p->grad

  const Array& value(Var v) const { return nodes_[v.id].value; }
  // Gradient of the Backward target w.r.t. v (zeros if unused).
  const Array& grad(Var v) const;

  // Elementwise and scalar arithmetic. Same-shape operands.
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  Var Div(Var a, Var b);
  Var Neg(Var a);
  Var AddScalar(Var a, double c);
  Var MulScalar(Var a, double c);
  Var Abs(Var a);
  Var Relu(Var a);
  Var Tanh(Var a);
  Var Sigmoid(Var a);
  Var Exp(Var a);
  Var Log(Var a);  // operand must be positive
  Var Softplus(Var a);
  Var Clamp(Var a, double lo, double hi);
  Var StopGrad(Var a);

  // Shape ops (2-D unless noted).
  Var Reshape(Var a, std::vector<int> shape);
  Var Transpose(Var a);
  Var SliceRows(Var a, int r0, int r1);
  Var SliceCols(Var a, int c0, int c1);
  Var ConcatRows(Var a, Var b);
  Var ConcatCols(Var a, Var b);
  Var GatherRows(Var a, std::vector<int> rows);
  Var TileRows(Var row, int n);  // [1 x D] -> [n x D]

  // Linear algebra and reductions.
  Var MatMul(Var a, Var b);
  Var AddRowBroadcast(Var a, Var row);  // a [T x D] + row [1 x D]
  Var SumAll(Var a);                    // -> [1]
  Var MeanAll(Var a);                   // -> [1]

  // Row-wise nonlinearities over [T x D].
  Var SoftmaxRows(Var a);
  Var LogSoftmaxRows(Var a);
  Var LayerNormRows(Var a, Var gamma, Var beta, double eps = 1e-5);

  // Convolutions. 1-D ops take [C x T]; channels-major time series.
  Var Conv1d(Var x, Var w, Var bias, int dilation);  // same-length output
  Var ConvTranspose1d(Var x, Var w, Var bias, int stride);  // [Cout x T*stride]
  Var PadZero1d(Var x, int left, int right);
  // 2-D ops take [N x C x H x W] flat arrays with explicit shapes.
  Var Conv2d(Var x, Var w, Var bias, int stride, int pad);
  Var AvgPool2d(Var x, int factor);

  // Loss heads.
  // log_probs [T x K] plus constant labels; returns scalar CTC NLL.
  Var CtcLoss(Var log_probs, std::vector<int> labels, int blank);
  // wave [1 x L] -> power spectrum [frames x (n_fft/2+1)], Hann window.
  Var StftPower(Var wave, int n_fft, int hop);

  // Seeds d(target)/d(target)=1 and accumulates gradients into every
  // reachable Param leaf. target must be a scalar.
  void Backward(Var target);

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Array value;
    Array grad;
    bool needs_grad = false;
    Parameter* param = nullptr;
    std::function<void(Tape*)> backward;  // null for leaves
  };

  Var Emit(Array value, bool needs_grad, std::function<void(Tape*)> backward);
  Array& GradRef(int id);
  bool NeedsGrad(Var v) const { return nodes_[v.id].needs_grad; }

  std::vector<Node> nodes_;
  // Id of the node whose backward is running; set by Backward so closures
  // can reach their own output gradient without capturing it.
  int current_ = -1;
};

}  // namespace vts

#endif  // VTSPEECH_NN_AUTODIFF_H_
