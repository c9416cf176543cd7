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

#include "nn/layers.h"

#include <cmath>

#include "common/status.h"

namespace vts {

Parameter* ParamStore::Create(const std::string& name,
                              std::vector<int> shape) {
  VTS_CHECK_ARG(Find(name) == nullptr, "duplicate parameter name: " + name);
  params_.push_back(
      std::make_unique<Parameter>(name, Array(std::move(shape))));
  return params_.back().get();
}

Parameter* ParamStore::CreateUniform(const std::string& name,
                                     std::vector<int> shape, Rng* rng,
                                     double scale) {
  Parameter* p = Create(name, std::move(shape));
  for (int64_t i = 0; i < p->value.size(); ++i) {
    p->value[i] = rng->Uniform(-scale, scale);
  }
  return p;
}

std::vector<Parameter*> ParamStore::All() const {
  std::vector<Parameter*> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.get());
  return out;
}

Parameter* ParamStore::Find(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return p.get();
  }
  return nullptr;
}

int64_t ParamStore::TotalSize() const {
  int64_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamStore::ZeroGrads() {
  for (const auto& p : params_) p->grad.Fill(0.0);
}

double XavierScale(int fan_in, int fan_out) {
  return std::sqrt(6.0 / (fan_in + fan_out));
}

Linear Linear::Create(ParamStore* store, const std::string& name, int in,
                      int out, Rng* rng) {
  Linear l;
  l.w = store->CreateUniform(name + ".w", {in, out}, rng, XavierScale(in, out));
  l.b = store->Create(name + ".b", {1, out});
  return l;
}

Linear Linear::CreateZero(ParamStore* store, const std::string& name, int in,
                          int out) {
  Linear l;
  l.w = store->Create(name + ".w", {in, out});
  l.b = store->Create(name + ".b", {1, out});
  return l;
}

Var Linear::Forward(Tape& t, Var x) const {
  return t.AddRowBroadcast(t.MatMul(x, t.Param(w)), t.Param(b));
}

Embedding Embedding::Create(ParamStore* store, const std::string& name, int v,
                            int d, Rng* rng) {
  Embedding e;
  e.table = store->CreateUniform(name + ".table", {v, d}, rng, 0.1);
  return e;
}

Var Embedding::Forward(Tape& t, const std::vector<int>& ids) const {
  return t.GatherRows(t.Param(table), ids);
}

LayerNorm LayerNorm::Create(ParamStore* store, const std::string& name,
                            int d) {
  LayerNorm ln;
  ln.gamma = store->Create(name + ".gamma", {1, d});
  ln.gamma->value.Fill(1.0);
  ln.beta = store->Create(name + ".beta", {1, d});
  return ln;
}

Var LayerNorm::Forward(Tape& t, Var x) const {
  return t.LayerNormRows(x, t.Param(gamma), t.Param(beta));
}

MultiHeadSelfAttention MultiHeadSelfAttention::Create(ParamStore* store,
                                                      const std::string& name,
                                                      int dim, int heads,
                                                      Rng* rng) {
  VTS_CHECK_ARG(dim % heads == 0, "attention width must divide by heads");
  MultiHeadSelfAttention a;
  a.qkv = Linear::Create(store, name + ".qkv", dim, 3 * dim, rng);
  a.out = Linear::Create(store, name + ".out", dim, dim, rng);
  a.heads = heads;
  a.dim = dim;
  return a;
}

Var MultiHeadSelfAttention::Forward(Tape& t, Var x) const {
  const int dk = dim / heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dk));
  Var proj = qkv.Forward(t, x);
  Var q = t.SliceCols(proj, 0, dim);
  Var k = t.SliceCols(proj, dim, 2 * dim);
  Var v = t.SliceCols(proj, 2 * dim, 3 * dim);
  Var merged;
  for (int h = 0; h < heads; ++h) {
    Var qh = t.SliceCols(q, h * dk, (h + 1) * dk);
    Var kh = t.SliceCols(k, h * dk, (h + 1) * dk);
    Var vh = t.SliceCols(v, h * dk, (h + 1) * dk);
    Var att = t.SoftmaxRows(t.MulScalar(t.MatMul(qh, t.Transpose(kh)), scale));
    Var oh = t.MatMul(att, vh);
    merged = h == 0 ? oh : t.ConcatCols(merged, oh);
  }
  return out.Forward(t, merged);
}

TransformerBlock TransformerBlock::Create(ParamStore* store,
                                          const std::string& name, int dim,
                                          int heads, int ffn_dim, Rng* rng) {
  TransformerBlock b;
  b.ln1 = LayerNorm::Create(store, name + ".ln1", dim);
  b.ln2 = LayerNorm::Create(store, name + ".ln2", dim);
  b.attn = MultiHeadSelfAttention::Create(store, name + ".attn", dim, heads,
                                          rng);
  b.ff1 = Linear::Create(store, name + ".ff1", dim, ffn_dim, rng);
  b.ff2 = Linear::Create(store, name + ".ff2", ffn_dim, dim, rng);
  return b;
}

Var TransformerBlock::Forward(Tape& t, Var x) const {
  x = t.Add(x, attn.Forward(t, ln1.Forward(t, x)));
  Var h = t.Relu(ff1.Forward(t, ln2.Forward(t, x)));
  return t.Add(x, ff2.Forward(t, h));
}

Conv1dLayer Conv1dLayer::Create(ParamStore* store, const std::string& name,
                                int ci, int co, int k, int dilation,
                                Rng* rng) {
  Conv1dLayer l;
  l.w = store->CreateUniform(name + ".w", {co, ci, k}, rng,
                             XavierScale(ci * k, co * k));
  l.b = store->Create(name + ".b", {1, co});
  l.dilation = dilation;
  return l;
}

Var Conv1dLayer::Forward(Tape& t, Var x) const {
  return t.Conv1d(x, t.Param(w), t.Param(b), dilation);
}

ConvT1dLayer ConvT1dLayer::Create(ParamStore* store, const std::string& name,
                                  int ci, int co, int k, int stride,
                                  Rng* rng) {
  ConvT1dLayer l;
  l.w = store->CreateUniform(name + ".w", {ci, co, k}, rng,
                             XavierScale(ci * k, co * k));
  l.b = store->Create(name + ".b", {1, co});
  l.stride = stride;
  return l;
}

Var ConvT1dLayer::Forward(Tape& t, Var x) const {
  return t.ConvTranspose1d(x, t.Param(w), t.Param(b), stride);
}

Conv2dLayer Conv2dLayer::Create(ParamStore* store, const std::string& name,
                                int ci, int co, int k, int stride, int pad,
                                Rng* rng) {
  Conv2dLayer l;
  l.w = store->CreateUniform(name + ".w", {co, ci, k, k}, rng,
                             XavierScale(ci * k * k, co * k * k));
  l.b = store->Create(name + ".b", {1, co});
  l.stride = stride;
  l.pad = pad;
  return l;
}

Var Conv2dLayer::Forward(Tape& t, Var x) const {
  return t.Conv2d(x, t.Param(w), t.Param(b), stride, pad);
}

Array SinusoidalPositions(int t_len, int d) {
  Array pe({t_len, d});
  for (int pos = 0; pos < t_len; ++pos) {
    for (int i = 0; i < d; i += 2) {
      const double angle =
          pos / std::pow(10000.0, static_cast<double>(i) / d);
      pe.at(pos, i) = std::sin(angle);
      if (i + 1 < d) pe.at(pos, i + 1) = std::cos(angle);
    }
  }
  return pe;
}

}  // namespace vts
