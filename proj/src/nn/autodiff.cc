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

#include "nn/autodiff.h"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <utility>

#include "align/ctc.h"
#include "common/fftw_guard.h"

namespace vts {

namespace {
Array ZerosLike(const Array& a) { return Array(a.shape()); }

int64_t CheckSameShape(const Array& a, const Array& b) {
  VTS_CHECK_ARG(a.SameShape(b), "elementwise op needs matching shapes");
  return a.size();
}
}  // namespace

Var Tape::Emit(Array value, bool needs_grad,
               std::function<void(Tape*)> backward) {
  Node node;
  node.value = std::move(value);
  node.needs_grad = needs_grad;
  node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Array& Tape::GradRef(int id) {
  Node& n = nodes_[id];
  if (n.grad.empty()) n.grad = ZerosLike(n.value);
  return n.grad;
}

const Array& Tape::grad(Var v) const {
  static const Array kEmpty;
  const Node& n = nodes_[v.id];
  return n.grad.empty() ? kEmpty : n.grad;
}

Var Tape::Constant(Array value) { return Emit(std::move(value), false, nullptr); }

Var Tape::Param(Parameter* p) {
  Node node;
  node.value = p->value;
  node.needs_grad = true;
  node.param = p;
  nodes_.push_back(std::move(node));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::Backward(Var target) {
  VTS_CHECK_ARG(target.valid() && target.id < size(), "invalid backward target");
  VTS_CHECK_ARG(nodes_[target.id].value.size() == 1,
                "backward target must be scalar");
  GradRef(target.id).Fill(1.0);
  for (int i = target.id; i >= 0; --i) {
    Node& n = nodes_[i];
    if (n.grad.empty() || !n.needs_grad) continue;
    if (n.backward) {
      current_ = i;
      n.backward(this);
    } else if (n.param != nullptr) {
      n.param->grad.AddInPlace(n.grad);
    }
  }
  current_ = -1;
}

// ---------------------------------------------------------------------------
// Elementwise ops.

Var Tape::Add(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  CheckSameShape(va, vb);
  Array out = va;
  out.AddInPlace(vb);
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) t->GradRef(ia).AddInPlace(g);
    if (t->nodes_[ib].needs_grad) t->GradRef(ib).AddInPlace(g);
  });
}

Var Tape::Sub(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  const int64_t n = CheckSameShape(va, vb);
  Array out = va;
  for (int64_t i = 0; i < n; ++i) out[i] -= vb[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) t->GradRef(ia).AddInPlace(g);
    if (t->nodes_[ib].needs_grad) t->GradRef(ib).Axpy(-1.0, g);
  });
}

Var Tape::Mul(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  const int64_t n = CheckSameShape(va, vb);
  Array out = va;
  for (int64_t i = 0; i < n; ++i) out[i] *= vb[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib, n](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    const Array& va = t->nodes_[ia].value;
    const Array& vb = t->nodes_[ib].value;
    if (t->nodes_[ia].needs_grad) {
      Array& da = t->GradRef(ia);
      for (int64_t i = 0; i < n; ++i) da[i] += g[i] * vb[i];
    }
    if (t->nodes_[ib].needs_grad) {
      Array& db = t->GradRef(ib);
      for (int64_t i = 0; i < n; ++i) db[i] += g[i] * va[i];
    }
  });
}

Var Tape::Div(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  const int64_t n = CheckSameShape(va, vb);
  Array out = va;
  for (int64_t i = 0; i < n; ++i) out[i] /= vb[i];
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib, n](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    const Array& va = t->nodes_[ia].value;
    const Array& vb = t->nodes_[ib].value;
    if (t->nodes_[ia].needs_grad) {
      Array& da = t->GradRef(ia);
      for (int64_t i = 0; i < n; ++i) da[i] += g[i] / vb[i];
    }
    if (t->nodes_[ib].needs_grad) {
      Array& db = t->GradRef(ib);
      for (int64_t i = 0; i < n; ++i) {
        db[i] -= g[i] * va[i] / (vb[i] * vb[i]);
      }
    }
  });
}

Var Tape::Neg(Var a) { return MulScalar(a, -1.0); }

Var Tape::AddScalar(Var a, double c) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] += c;
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (t->nodes_[ia].needs_grad) {
      t->GradRef(ia).AddInPlace(t->nodes_[t->current_].grad);
    }
  });
}

Var Tape::MulScalar(Var a, double c) {
  Array out = value(a);
  out.ScaleInPlace(c);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia, c](Tape* t) {
    if (t->nodes_[ia].needs_grad) {
      t->GradRef(ia).Axpy(c, t->nodes_[t->current_].grad);
    }
  });
}

Var Tape::Abs(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::abs(out[i]);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    const Array& x = t->nodes_[ia].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) {
      da[i] += g[i] * (x[i] > 0.0 ? 1.0 : (x[i] < 0.0 ? -1.0 : 0.0));
    }
  });
}

Var Tape::Relu(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::max(0.0, out[i]);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    const Array& x = t->nodes_[ia].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) {
      if (x[i] > 0.0) da[i] += g[i];
    }
  });
}

Var Tape::Tanh(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::tanh(out[i]);
  int ia = a.id;
  int self = size();
  return Emit(std::move(out), NeedsGrad(a), [ia, self](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[self].grad;
    const Array& y = t->nodes_[self].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) da[i] += g[i] * (1.0 - y[i] * y[i]);
  });
}

Var Tape::Sigmoid(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = x >= 0.0 ? 1.0 / (1.0 + std::exp(-x))
                      : std::exp(x) / (1.0 + std::exp(x));
  }
  int ia = a.id;
  int self = size();
  return Emit(std::move(out), NeedsGrad(a), [ia, self](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[self].grad;
    const Array& y = t->nodes_[self].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i] * (1.0 - y[i]);
  });
}

Var Tape::Exp(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::exp(out[i]);
  int ia = a.id;
  int self = size();
  return Emit(std::move(out), NeedsGrad(a), [ia, self](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[self].grad;
    const Array& y = t->nodes_[self].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) da[i] += g[i] * y[i];
  });
}

Var Tape::Log(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::log(out[i]);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    const Array& x = t->nodes_[ia].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) da[i] += g[i] / x[i];
  });
}

Var Tape::Softplus(Var a) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x)));
  }
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    const Array& x = t->nodes_[ia].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) {
      const double v = x[i];
      const double s = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v))
                                : std::exp(v) / (1.0 + std::exp(v));
      da[i] += g[i] * s;
    }
  });
}

Var Tape::Clamp(Var a, double lo, double hi) {
  Array out = value(a);
  for (int64_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lo, hi);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia, lo, hi](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    const Array& x = t->nodes_[ia].value;
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < g.size(); ++i) {
      if (x[i] >= lo && x[i] <= hi) da[i] += g[i];
    }
  });
}

Var Tape::StopGrad(Var a) { return Emit(value(a), false, nullptr); }

// ---------------------------------------------------------------------------
// Shape ops.

Var Tape::Reshape(Var a, std::vector<int> shape) {
  Array out = value(a).Reshaped(shape);
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    Array back = g.Reshaped(t->nodes_[ia].value.shape());
    t->GradRef(ia).AddInPlace(back);
  });
}

Var Tape::Transpose(Var a) {
  Array out = Transposed2d(value(a));
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    Array back = Transposed2d(t->nodes_[t->current_].grad);
    t->GradRef(ia).AddInPlace(back);
  });
}

Var Tape::SliceRows(Var a, int r0, int r1) {
  const Array& v = value(a);
  VTS_CHECK_ARG(v.ndim() == 2 && r0 >= 0 && r0 < r1 && r1 <= v.dim(0),
                "bad row slice");
  const int d = v.dim(1);
  Array out({r1 - r0, d});
  for (int r = r0; r < r1; ++r) {
    for (int c = 0; c < d; ++c) out.at(r - r0, c) = v.at(r, c);
  }
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia, r0, r1, d](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    Array& da = t->GradRef(ia);
    for (int r = r0; r < r1; ++r) {
      for (int c = 0; c < d; ++c) da.at(r, c) += g.at(r - r0, c);
    }
  });
}

Var Tape::SliceCols(Var a, int c0, int c1) {
  const Array& v = value(a);
  VTS_CHECK_ARG(v.ndim() == 2 && c0 >= 0 && c0 < c1 && c1 <= v.dim(1),
                "bad col slice");
  const int rows = v.dim(0);
  Array out({rows, c1 - c0});
  for (int r = 0; r < rows; ++r) {
    for (int c = c0; c < c1; ++c) out.at(r, c - c0) = v.at(r, c);
  }
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia, c0, c1, rows](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    Array& da = t->GradRef(ia);
    for (int r = 0; r < rows; ++r) {
      for (int c = c0; c < c1; ++c) da.at(r, c) += g.at(r, c - c0);
    }
  });
}

Var Tape::ConcatRows(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  VTS_CHECK_ARG(va.ndim() == 2 && vb.ndim() == 2 && va.dim(1) == vb.dim(1),
                "row concat needs equal widths");
  const int ra = va.dim(0), rb = vb.dim(0), d = va.dim(1);
  Array out({ra + rb, d});
  for (int r = 0; r < ra; ++r)
    for (int c = 0; c < d; ++c) out.at(r, c) = va.at(r, c);
  for (int r = 0; r < rb; ++r)
    for (int c = 0; c < d; ++c) out.at(ra + r, c) = vb.at(r, c);
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib, ra, rb, d](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) {
      Array& da = t->GradRef(ia);
      for (int r = 0; r < ra; ++r)
        for (int c = 0; c < d; ++c) da.at(r, c) += g.at(r, c);
    }
    if (t->nodes_[ib].needs_grad) {
      Array& db = t->GradRef(ib);
      for (int r = 0; r < rb; ++r)
        for (int c = 0; c < d; ++c) db.at(r, c) += g.at(ra + r, c);
    }
  });
}

Var Tape::ConcatCols(Var a, Var b) {
  const Array& va = value(a);
  const Array& vb = value(b);
  VTS_CHECK_ARG(va.ndim() == 2 && vb.ndim() == 2 && va.dim(0) == vb.dim(0),
                "col concat needs equal heights");
  const int rows = va.dim(0), ca = va.dim(1), cb = vb.dim(1);
  Array out({rows, ca + cb});
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < ca; ++c) out.at(r, c) = va.at(r, c);
    for (int c = 0; c < cb; ++c) out.at(r, ca + c) = vb.at(r, c);
  }
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib, rows, ca, cb](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) {
      Array& da = t->GradRef(ia);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < ca; ++c) da.at(r, c) += g.at(r, c);
    }
    if (t->nodes_[ib].needs_grad) {
      Array& db = t->GradRef(ib);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cb; ++c) db.at(r, c) += g.at(r, ca + c);
    }
  });
}

Var Tape::GatherRows(Var a, std::vector<int> rows) {
  const Array& v = value(a);
  VTS_CHECK_ARG(v.ndim() == 2, "gather needs a matrix");
  const int d = v.dim(1);
  Array out({static_cast<int>(rows.size()), d});
  for (size_t i = 0; i < rows.size(); ++i) {
    VTS_CHECK_ARG(rows[i] >= 0 && rows[i] < v.dim(0), "gather row out of range");
    for (int c = 0; c < d; ++c) out.at(static_cast<int>(i), c) = v.at(rows[i], c);
  }
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a),
              [ia, rows = std::move(rows), d](Tape* t) {
                if (!t->nodes_[ia].needs_grad) return;
                const Array& g = t->nodes_[t->current_].grad;
                Array& da = t->GradRef(ia);
                for (size_t i = 0; i < rows.size(); ++i) {
                  for (int c = 0; c < d; ++c) {
                    da.at(rows[i], c) += g.at(static_cast<int>(i), c);
                  }
                }
              });
}

Var Tape::TileRows(Var row, int n) {
  const Array& v = value(row);
  VTS_CHECK_ARG(v.ndim() == 2 && v.dim(0) == 1, "tile expects a [1 x D] row");
  const int d = v.dim(1);
  Array out({n, d});
  for (int r = 0; r < n; ++r)
    for (int c = 0; c < d; ++c) out.at(r, c) = v.at(0, c);
  int ia = row.id;
  return Emit(std::move(out), NeedsGrad(row), [ia, n, d](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    Array& da = t->GradRef(ia);
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < d; ++c) da.at(0, c) += g.at(r, c);
  });
}

// ---------------------------------------------------------------------------
// Linear algebra and reductions.

Var Tape::MatMul(Var a, Var b) {
  Array out = vts::MatMul(value(a), value(b));
  const bool ng = NeedsGrad(a) || NeedsGrad(b);
  int ia = a.id, ib = b.id;
  return Emit(std::move(out), ng, [ia, ib](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) {
      MatMulAccum(g, false, t->nodes_[ib].value, true, &t->GradRef(ia));
    }
    if (t->nodes_[ib].needs_grad) {
      MatMulAccum(t->nodes_[ia].value, true, g, false, &t->GradRef(ib));
    }
  });
}

Var Tape::AddRowBroadcast(Var a, Var row) {
  const Array& va = value(a);
  const Array& vr = value(row);
  VTS_CHECK_ARG(va.ndim() == 2 && vr.ndim() == 2 && vr.dim(0) == 1 &&
                    vr.dim(1) == va.dim(1),
                "row broadcast shape mismatch");
  const int rows = va.dim(0), d = va.dim(1);
  Array out = va;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < d; ++c) out.at(r, c) += vr.at(0, c);
  const bool ng = NeedsGrad(a) || NeedsGrad(row);
  int ia = a.id, ir = row.id;
  return Emit(std::move(out), ng, [ia, ir, rows, d](Tape* t) {
    const Array& g = t->nodes_[t->current_].grad;
    if (t->nodes_[ia].needs_grad) t->GradRef(ia).AddInPlace(g);
    if (t->nodes_[ir].needs_grad) {
      Array& dr = t->GradRef(ir);
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < d; ++c) dr.at(0, c) += g.at(r, c);
    }
  });
}

Var Tape::SumAll(Var a) {
  Array out({1});
  out[0] = value(a).Sum();
  int ia = a.id;
  return Emit(std::move(out), NeedsGrad(a), [ia](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const double g = t->nodes_[t->current_].grad[0];
    Array& da = t->GradRef(ia);
    for (int64_t i = 0; i < da.size(); ++i) da[i] += g;
  });
}

Var Tape::MeanAll(Var a) {
  return MulScalar(SumAll(a), 1.0 / static_cast<double>(value(a).size()));
}

// ---------------------------------------------------------------------------
// Row-wise nonlinearities.

Var Tape::SoftmaxRows(Var a) {
  const Array& v = value(a);
  VTS_CHECK_ARG(v.ndim() == 2, "softmax expects a matrix");
  const int rows = v.dim(0), d = v.dim(1);
  Array out = v;
  for (int r = 0; r < rows; ++r) {
    double m = out.at(r, 0);
    for (int c = 1; c < d; ++c) m = std::max(m, out.at(r, c));
    double z = 0.0;
    for (int c = 0; c < d; ++c) {
      out.at(r, c) = std::exp(out.at(r, c) - m);
      z += out.at(r, c);
    }
    for (int c = 0; c < d; ++c) out.at(r, c) /= z;
  }
  int ia = a.id;
  int self = size();
  return Emit(std::move(out), NeedsGrad(a), [ia, self, rows, d](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[self].grad;
    const Array& y = t->nodes_[self].value;
    Array& da = t->GradRef(ia);
    for (int r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (int c = 0; c < d; ++c) dot += g.at(r, c) * y.at(r, c);
      for (int c = 0; c < d; ++c) {
        da.at(r, c) += y.at(r, c) * (g.at(r, c) - dot);
      }
    }
  });
}

Var Tape::LogSoftmaxRows(Var a) {
  const Array& v = value(a);
  VTS_CHECK_ARG(v.ndim() == 2, "log-softmax expects a matrix");
  const int rows = v.dim(0), d = v.dim(1);
  Array out = v;
  for (int r = 0; r < rows; ++r) {
    const double lse = LogSumExp(v.data() + static_cast<size_t>(r) * d, d);
    for (int c = 0; c < d; ++c) out.at(r, c) -= lse;
  }
  int ia = a.id;
  int self = size();
  return Emit(std::move(out), NeedsGrad(a), [ia, self, rows, d](Tape* t) {
    if (!t->nodes_[ia].needs_grad) return;
    const Array& g = t->nodes_[self].grad;
    const Array& y = t->nodes_[self].value;
    Array& da = t->GradRef(ia);
    for (int r = 0; r < rows; ++r) {
      double gsum = 0.0;
      for (int c = 0; c < d; ++c) gsum += g.at(r, c);
      for (int c = 0; c < d; ++c) {
        da.at(r, c) += g.at(r, c) - std::exp(y.at(r, c)) * gsum;
      }
    }
  });
}

Var Tape::LayerNormRows(Var a, Var gamma, Var beta, double eps) {
  const Array& v = value(a);
  const Array& vg = value(gamma);
  const Array& vb = value(beta);
  VTS_CHECK_ARG(v.ndim() == 2, "layer norm expects a matrix");
  const int rows = v.dim(0), d = v.dim(1);
  VTS_CHECK_ARG(vg.dim(0) == 1 && vg.dim(1) == d && vb.dim(0) == 1 &&
                    vb.dim(1) == d,
                "layer norm scale/shift must be [1 x D]");
  Array out({rows, d});
  Array xhat({rows, d});
  std::vector<double> inv_std(rows);
  for (int r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (int c = 0; c < d; ++c) mean += v.at(r, c);
    mean /= d;
    double var = 0.0;
    for (int c = 0; c < d; ++c) {
      const double dv = v.at(r, c) - mean;
      var += dv * dv;
    }
    var /= d;
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (int c = 0; c < d; ++c) {
      xhat.at(r, c) = (v.at(r, c) - mean) * inv_std[r];
      out.at(r, c) = xhat.at(r, c) * vg.at(0, c) + vb.at(0, c);
    }
  }
  const bool ng = NeedsGrad(a) || NeedsGrad(gamma) || NeedsGrad(beta);
  int ia = a.id, ig = gamma.id, ib = beta.id;
  return Emit(std::move(out), ng,
              [ia, ig, ib, rows, d, xhat = std::move(xhat),
               inv_std = std::move(inv_std)](Tape* t) {
                const Array& g = t->nodes_[t->current_].grad;
                const Array& vg = t->nodes_[ig].value;
                if (t->nodes_[ig].needs_grad) {
                  Array& dg = t->GradRef(ig);
                  for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < d; ++c)
                      dg.at(0, c) += g.at(r, c) * xhat.at(r, c);
                }
                if (t->nodes_[ib].needs_grad) {
                  Array& db = t->GradRef(ib);
                  for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < d; ++c) db.at(0, c) += g.at(r, c);
                }
                if (t->nodes_[ia].needs_grad) {
                  Array& da = t->GradRef(ia);
                  for (int r = 0; r < rows; ++r) {
                    double m1 = 0.0, m2 = 0.0;
                    for (int c = 0; c < d; ++c) {
                      const double gz = g.at(r, c) * vg.at(0, c);
                      m1 += gz;
                      m2 += gz * xhat.at(r, c);
                    }
                    m1 /= d;
                    m2 /= d;
                    for (int c = 0; c < d; ++c) {
                      const double gz = g.at(r, c) * vg.at(0, c);
                      da.at(r, c) +=
                          (gz - m1 - xhat.at(r, c) * m2) * inv_std[r];
                    }
                  }
                }
              });
}

// ---------------------------------------------------------------------------
// Convolutions.

Var Tape::Conv1d(Var x, Var w, Var bias, int dilation) {
  const Array& vx = value(x);
  const Array& vw = value(w);
  const Array& vb = value(bias);
  VTS_CHECK_ARG(vx.ndim() == 2 && vw.ndim() == 3, "conv1d expects [C x T], [Co x Ci x k]");
  const int ci = vx.dim(0), tlen = vx.dim(1);
  const int co = vw.dim(0), k = vw.dim(2);
  VTS_CHECK_ARG(vw.dim(1) == ci, "conv1d channel mismatch");
  VTS_CHECK_ARG(k % 2 == 1, "conv1d kernel must be odd for same-length output");
  VTS_CHECK_ARG(dilation >= 1, "conv1d dilation must be positive");
  VTS_CHECK_ARG(vb.dim(0) == 1 && vb.dim(1) == co, "conv1d bias must be [1 x Co]");
  const int half = (k - 1) / 2;

  Array out({co, tlen});
  for (int o = 0; o < co; ++o) {
    for (int t = 0; t < tlen; ++t) {
      double acc = vb.at(0, o);
      for (int c = 0; c < ci; ++c) {
        for (int j = 0; j < k; ++j) {
          const int src = t + (j - half) * dilation;
          if (src < 0 || src >= tlen) continue;
          acc += vx.at(c, src) * vw.at(o, c, j);
        }
      }
      out.at(o, t) = acc;
    }
  }
  const bool ng = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(bias);
  int ix = x.id, iw = w.id, ib = bias.id;
  return Emit(std::move(out), ng,
              [ix, iw, ib, ci, co, tlen, k, half, dilation](Tape* t) {
                const Array& g = t->nodes_[t->current_].grad;
                const Array& vx = t->nodes_[ix].value;
                const Array& vw = t->nodes_[iw].value;
                const bool nx = t->nodes_[ix].needs_grad;
                const bool nw = t->nodes_[iw].needs_grad;
                if (t->nodes_[ib].needs_grad) {
                  Array& db = t->GradRef(ib);
                  for (int o = 0; o < co; ++o) {
                    double acc = 0.0;
                    for (int tt = 0; tt < tlen; ++tt) acc += g.at(o, tt);
                    db.at(0, o) += acc;
                  }
                }
                if (!nx && !nw) return;
                Array* dx = nx ? &t->GradRef(ix) : nullptr;
                Array* dw = nw ? &t->GradRef(iw) : nullptr;
                for (int o = 0; o < co; ++o) {
                  for (int tt = 0; tt < tlen; ++tt) {
                    const double go = g.at(o, tt);
                    if (go == 0.0) continue;
                    for (int c = 0; c < ci; ++c) {
                      for (int j = 0; j < k; ++j) {
                        const int src = tt + (j - half) * dilation;
                        if (src < 0 || src >= tlen) continue;
                        if (dx) dx->at(c, src) += go * vw.at(o, c, j);
                        if (dw) dw->at(o, c, j) += go * vx.at(c, src);
                      }
                    }
                  }
                }
              });
}

Var Tape::ConvTranspose1d(Var x, Var w, Var bias, int stride) {
  const Array& vx = value(x);
  const Array& vw = value(w);
  const Array& vb = value(bias);
  VTS_CHECK_ARG(vx.ndim() == 2 && vw.ndim() == 3,
                "conv_transpose1d expects [Ci x T], [Ci x Co x k]");
  const int ci = vx.dim(0), tlen = vx.dim(1);
  const int co = vw.dim(1), k = vw.dim(2);
  VTS_CHECK_ARG(vw.dim(0) == ci, "conv_transpose1d channel mismatch");
  VTS_CHECK_ARG(stride >= 1 && k >= stride && (k - stride) % 2 == 0,
                "conv_transpose1d needs k >= stride with even overhang");
  VTS_CHECK_ARG(vb.dim(0) == 1 && vb.dim(1) == co,
                "conv_transpose1d bias must be [1 x Co]");
  const int pad = (k - stride) / 2;
  const int out_len = tlen * stride;

  Array out({co, out_len});
  for (int o = 0; o < co; ++o)
    for (int j = 0; j < out_len; ++j) out.at(o, j) = vb.at(0, o);
  for (int c = 0; c < ci; ++c) {
    for (int t = 0; t < tlen; ++t) {
      const double xv = vx.at(c, t);
      if (xv == 0.0) continue;
      for (int j = 0; j < k; ++j) {
        const int dst = t * stride + j - pad;
        if (dst < 0 || dst >= out_len) continue;
        for (int o = 0; o < co; ++o) {
          out.at(o, dst) += xv * vw.at(c, o, j);
        }
      }
    }
  }
  const bool ng = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(bias);
  int ix = x.id, iw = w.id, ib = bias.id;
  return Emit(std::move(out), ng,
              [ix, iw, ib, ci, co, tlen, k, pad, stride, out_len](Tape* t) {
                const Array& g = t->nodes_[t->current_].grad;
                const Array& vx = t->nodes_[ix].value;
                const Array& vw = t->nodes_[iw].value;
                const bool nx = t->nodes_[ix].needs_grad;
                const bool nw = t->nodes_[iw].needs_grad;
                if (t->nodes_[ib].needs_grad) {
                  Array& db = t->GradRef(ib);
                  for (int o = 0; o < co; ++o) {
                    double acc = 0.0;
                    for (int j = 0; j < out_len; ++j) acc += g.at(o, j);
                    db.at(0, o) += acc;
                  }
                }
                if (!nx && !nw) return;
                Array* dx = nx ? &t->GradRef(ix) : nullptr;
                Array* dw = nw ? &t->GradRef(iw) : nullptr;
                for (int c = 0; c < ci; ++c) {
                  for (int tt = 0; tt < tlen; ++tt) {
                    for (int j = 0; j < k; ++j) {
                      const int dst = tt * stride + j - pad;
                      if (dst < 0 || dst >= out_len) continue;
                      for (int o = 0; o < co; ++o) {
                        const double go = g.at(o, dst);
                        if (dx) dx->at(c, tt) += go * vw.at(c, o, j);
                        if (dw) dw->at(c, o, j) += go * vx.at(c, tt);
                      }
                    }
                  }
                }
              });
}

Var Tape::PadZero1d(Var x, int left, int right) {
  const Array& v = value(x);
  VTS_CHECK_ARG(v.ndim() == 2 && left >= 0 && right >= 0, "bad 1-D padding");
  const int c = v.dim(0), tlen = v.dim(1);
  Array out({c, tlen + left + right});
  for (int i = 0; i < c; ++i)
    for (int t = 0; t < tlen; ++t) out.at(i, left + t) = v.at(i, t);
  int ix = x.id;
  return Emit(std::move(out), NeedsGrad(x), [ix, c, tlen, left](Tape* t) {
    if (!t->nodes_[ix].needs_grad) return;
    const Array& g = t->nodes_[t->current_].grad;
    Array& dx = t->GradRef(ix);
    for (int i = 0; i < c; ++i)
      for (int tt = 0; tt < tlen; ++tt) dx.at(i, tt) += g.at(i, left + tt);
  });
}

namespace {
inline int64_t Idx4(int n, int c, int h, int w, int C, int H, int W) {
  return ((static_cast<int64_t>(n) * C + c) * H + h) * W + w;
}
}  // namespace

Var Tape::Conv2d(Var x, Var w, Var bias, int stride, int pad) {
  const Array& vx = value(x);
  const Array& vw = value(w);
  const Array& vb = value(bias);
  VTS_CHECK_ARG(vx.ndim() == 4 && vw.ndim() == 4,
                "conv2d expects [N x C x H x W] and [Co x Ci x kh x kw]");
  const int n = vx.dim(0), ci = vx.dim(1), h = vx.dim(2), wd = vx.dim(3);
  const int co = vw.dim(0), kh = vw.dim(2), kw = vw.dim(3);
  VTS_CHECK_ARG(vw.dim(1) == ci, "conv2d channel mismatch");
  VTS_CHECK_ARG(stride >= 1 && pad >= 0, "bad conv2d stride/pad");
  VTS_CHECK_ARG(vb.dim(0) == 1 && vb.dim(1) == co, "conv2d bias must be [1 x Co]");
  const int ho = (h + 2 * pad - kh) / stride + 1;
  const int wo = (wd + 2 * pad - kw) / stride + 1;
  VTS_CHECK_ARG(ho >= 1 && wo >= 1, "conv2d output collapses to zero size");

  Array out({n, co, ho, wo});
  const double* px = vx.data();
  const double* pw = vw.data();
  double* po = out.data();
  for (int b = 0; b < n; ++b) {
    for (int o = 0; o < co; ++o) {
      for (int r = 0; r < ho; ++r) {
        for (int c = 0; c < wo; ++c) {
          double acc = vb.at(0, o);
          for (int ic = 0; ic < ci; ++ic) {
            for (int jr = 0; jr < kh; ++jr) {
              const int sr = r * stride + jr - pad;
              if (sr < 0 || sr >= h) continue;
              for (int jc = 0; jc < kw; ++jc) {
                const int sc = c * stride + jc - pad;
                if (sc < 0 || sc >= wd) continue;
                acc += px[Idx4(b, ic, sr, sc, ci, h, wd)] *
                       pw[Idx4(o, ic, jr, jc, ci, kh, kw)];
              }
            }
          }
          po[Idx4(b, o, r, c, co, ho, wo)] = acc;
        }
      }
    }
  }
  const bool ng = NeedsGrad(x) || NeedsGrad(w) || NeedsGrad(bias);
  int ix = x.id, iw = w.id, ib = bias.id;
  return Emit(std::move(out), ng,
              [ix, iw, ib, n, ci, h, wd, co, kh, kw, ho, wo, stride,
               pad](Tape* t) {
                const Array& g = t->nodes_[t->current_].grad;
                const Array& vx = t->nodes_[ix].value;
                const Array& vw = t->nodes_[iw].value;
                const bool nx = t->nodes_[ix].needs_grad;
                const bool nw = t->nodes_[iw].needs_grad;
                const double* pg = g.data();
                if (t->nodes_[ib].needs_grad) {
                  Array& db = t->GradRef(ib);
                  for (int b = 0; b < n; ++b)
                    for (int o = 0; o < co; ++o) {
                      double acc = 0.0;
                      for (int r = 0; r < ho; ++r)
                        for (int c = 0; c < wo; ++c)
                          acc += pg[Idx4(b, o, r, c, co, ho, wo)];
                      db.at(0, o) += acc;
                    }
                }
                if (!nx && !nw) return;
                double* pdx = nx ? t->GradRef(ix).data() : nullptr;
                double* pdw = nw ? t->GradRef(iw).data() : nullptr;
                const double* px = vx.data();
                const double* pw = vw.data();
                for (int b = 0; b < n; ++b) {
                  for (int o = 0; o < co; ++o) {
                    for (int r = 0; r < ho; ++r) {
                      for (int c = 0; c < wo; ++c) {
                        const double go = pg[Idx4(b, o, r, c, co, ho, wo)];
                        if (go == 0.0) continue;
                        for (int ic = 0; ic < ci; ++ic) {
                          for (int jr = 0; jr < kh; ++jr) {
                            const int sr = r * stride + jr - pad;
                            if (sr < 0 || sr >= h) continue;
                            for (int jc = 0; jc < kw; ++jc) {
                              const int sc = c * stride + jc - pad;
                              if (sc < 0 || sc >= wd) continue;
                              if (pdx) {
                                pdx[Idx4(b, ic, sr, sc, ci, h, wd)] +=
                                    go * pw[Idx4(o, ic, jr, jc, ci, kh, kw)];
                              }
                              if (pdw) {
                                pdw[Idx4(o, ic, jr, jc, ci, kh, kw)] +=
                                    go * px[Idx4(b, ic, sr, sc, ci, h, wd)];
                              }
                            }
                          }
                        }
                      }
                    }
                  }
                }
              });
}

Var Tape::AvgPool2d(Var x, int factor) {
  const Array& v = value(x);
  VTS_CHECK_ARG(v.ndim() == 4, "avg pool expects [N x C x H x W]");
  VTS_CHECK_ARG(factor >= 1 && v.dim(2) % factor == 0 && v.dim(3) % factor == 0,
                "avg pool needs divisible spatial dims");
  const int n = v.dim(0), c = v.dim(1), h = v.dim(2), w = v.dim(3);
  const int ho = h / factor, wo = w / factor;
  const double scale = 1.0 / (factor * factor);
  Array out({n, c, ho, wo});
  const double* pv = v.data();
  double* po = out.data();
  for (int b = 0; b < n; ++b)
    for (int ch = 0; ch < c; ++ch)
      for (int r = 0; r < ho; ++r)
        for (int cc = 0; cc < wo; ++cc) {
          double acc = 0.0;
          for (int jr = 0; jr < factor; ++jr)
            for (int jc = 0; jc < factor; ++jc)
              acc += pv[Idx4(b, ch, r * factor + jr, cc * factor + jc, c, h, w)];
          po[Idx4(b, ch, r, cc, c, ho, wo)] = acc * scale;
        }
  int ix = x.id;
  return Emit(std::move(out), NeedsGrad(x),
              [ix, n, c, h, w, ho, wo, factor, scale](Tape* t) {
                if (!t->nodes_[ix].needs_grad) return;
                const Array& g = t->nodes_[t->current_].grad;
                const double* pg = g.data();
                double* pdx = t->GradRef(ix).data();
                for (int b = 0; b < n; ++b)
                  for (int ch = 0; ch < c; ++ch)
                    for (int r = 0; r < ho; ++r)
                      for (int cc = 0; cc < wo; ++cc) {
                        const double go =
                            pg[Idx4(b, ch, r, cc, c, ho, wo)] * scale;
                        for (int jr = 0; jr < factor; ++jr)
                          for (int jc = 0; jc < factor; ++jc)
                            pdx[Idx4(b, ch, r * factor + jr, cc * factor + jc,
                                     c, h, w)] += go;
                      }
              });
}

// ---------------------------------------------------------------------------
// Loss heads.

Var Tape::CtcLoss(Var log_probs, std::vector<int> labels, int blank) {
  FramePosterior post;
  post.log_probs = value(log_probs);
  post.blank = blank;
  Array ctc_grad;
  const double nll = CtcNll(post, labels, &ctc_grad);
  Array out({1});
  out[0] = nll;
  int ix = log_probs.id;
  return Emit(std::move(out), NeedsGrad(log_probs),
              [ix, ctc_grad = std::move(ctc_grad)](Tape* t) {
                if (!t->nodes_[ix].needs_grad) return;
                const double g = t->nodes_[t->current_].grad[0];
                t->GradRef(ix).Axpy(g, ctc_grad);
              });
}

Var Tape::StftPower(Var wave, int n_fft, int hop) {
  const Array& v = value(wave);
  VTS_CHECK_ARG(v.ndim() == 2 && v.dim(0) == 1, "stft expects a [1 x L] wave");
  const int len = v.dim(1);
  VTS_CHECK_ARG(len >= n_fft, "wave shorter than one stft window");
  VTS_CHECK_ARG(hop >= 1, "hop must be positive");
  const int frames = 1 + (len - n_fft) / hop;
  const int bins = n_fft / 2 + 1;

  std::vector<double> window(n_fft);
  for (int i = 0; i < n_fft; ++i) {
    window[i] = 0.5 * (1.0 - std::cos(2.0 * M_PI * i / n_fft));
  }

  double* in = fftw_alloc_real(n_fft);
  fftw_complex* cplx = fftw_alloc_complex(bins);
  fftw_plan fwd = nullptr;
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fwd = fftw_plan_dft_r2c_1d(n_fft, in, cplx, FFTW_ESTIMATE);
  }
  Array out({frames, bins});
  Array spectra({frames, bins, 2});  // saved for backward
  for (int f = 0; f < frames; ++f) {
    const int start = f * hop;
    for (int i = 0; i < n_fft; ++i) in[i] = v.at(0, start + i) * window[i];
    fftw_execute(fwd);
    for (int k = 0; k < bins; ++k) {
      const double re = cplx[k][0], im = cplx[k][1];
      spectra.at(f, k, 0) = re;
      spectra.at(f, k, 1) = im;
      out.at(f, k) = re * re + im * im;
    }
  }
  {
    std::lock_guard<std::mutex> lock(FftwPlannerMutex());
    fftw_destroy_plan(fwd);
  }
  fftw_free(in);
  fftw_free(cplx);

  int ix = wave.id;
  return Emit(
      std::move(out), NeedsGrad(wave),
      [ix, n_fft, hop, frames, bins, window = std::move(window),
       spectra = std::move(spectra)](Tape* t) {
        if (!t->nodes_[ix].needs_grad) return;
        const Array& g = t->nodes_[t->current_].grad;
        Array& dx = t->GradRef(ix);
        // d|X_k|^2/dx = inverse transform of 2 g_k X_k; FFTW's c2r halves
        // the contribution of the DC and Nyquist bins, so they are doubled
        // before the transform.
        fftw_complex* cin = fftw_alloc_complex(bins);
        double* rout = fftw_alloc_real(n_fft);
        fftw_plan inv = nullptr;
        {
          std::lock_guard<std::mutex> lock(FftwPlannerMutex());
          inv = fftw_plan_dft_c2r_1d(n_fft, cin, rout, FFTW_ESTIMATE);
        }
        for (int f = 0; f < frames; ++f) {
          for (int k = 0; k < bins; ++k) {
            double scale = g.at(f, k);
            if (k == 0 || (n_fft % 2 == 0 && k == bins - 1)) scale *= 2.0;
            cin[k][0] = scale * spectra.at(f, k, 0);
            cin[k][1] = scale * spectra.at(f, k, 1);
          }
          fftw_execute(inv);
          const int start = f * hop;
          for (int i = 0; i < n_fft; ++i) {
            dx.at(0, start + i) += rout[i] * window[i];
          }
        }
        {
          std::lock_guard<std::mutex> lock(FftwPlannerMutex());
          fftw_destroy_plan(inv);
        }
        fftw_free(cin);
        fftw_free(rout);
      });
}

}  // namespace vts
