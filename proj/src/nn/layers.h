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

#ifndef VTSPEECH_NN_LAYERS_H_
#define VTSPEECH_NN_LAYERS_H_

#include <memory>
#include <string>
#include <vector>

#include "common/rng.h"
#include "nn/autodiff.h"

namespace vts {

// Owns every Parameter of a model; iteration order is creation order, which
// fixes the checkpoint blob layout.
class ParamStore {
 public:
  Parameter* Create(const std::string& name, std::vector<int> shape);
  // Uniform(-scale, scale) entries.
  Parameter* CreateUniform(const std::string& name, std::vector<int> shape,
                           Rng* rng, double scale);

  const std::vector<std::unique_ptr<Parameter>>& params() const {
    return params_;
  }
  std::vector<Parameter*> All() const;
  Parameter* Find(const std::string& name) const;
  int64_t TotalSize() const;
  void ZeroGrads();

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

// Xavier-uniform bound for a weight with the given fan-in/out.
double XavierScale(int fan_in, int fan_out);

struct Linear {
  Parameter* w = nullptr;  // [in x out]
  Parameter* b = nullptr;  // [1 x out]

  static Linear Create(ParamStore* store, const std::string& name, int in,
                       int out, Rng* rng);
  // Zero-filled weights; used where identity-at-init matters.
  static Linear CreateZero(ParamStore* store, const std::string& name, int in,
                           int out);
  Var Forward(Tape& t, Var x) const;  // x [T x in] -> [T x out]
};

struct Embedding {
  Parameter* table = nullptr;  // [V x D]

  static Embedding Create(ParamStore* store, const std::string& name, int v,
                          int d, Rng* rng);
  Var Forward(Tape& t, const std::vector<int>& ids) const;
};

struct LayerNorm {
  Parameter* gamma = nullptr;  // [1 x D]
  Parameter* beta = nullptr;   // [1 x D]

  static LayerNorm Create(ParamStore* store, const std::string& name, int d);
  Var Forward(Tape& t, Var x) const;
};

struct MultiHeadSelfAttention {
  Linear qkv;
  Linear out;
  int heads = 1;
  int dim = 0;

  static MultiHeadSelfAttention Create(ParamStore* store,
                                       const std::string& name, int dim,
                                       int heads, Rng* rng);
  Var Forward(Tape& t, Var x) const;  // [T x D] -> [T x D]
};

// Pre-norm block: x + attn(ln(x)), then x + ffn(ln(x)).
struct TransformerBlock {
  LayerNorm ln1, ln2;
  MultiHeadSelfAttention attn;
  Linear ff1, ff2;

  static TransformerBlock Create(ParamStore* store, const std::string& name,
                                 int dim, int heads, int ffn_dim, Rng* rng);
  Var Forward(Tape& t, Var x) const;
};

struct Conv1dLayer {
  Parameter* w = nullptr;  // [Co x Ci x k]
  Parameter* b = nullptr;  // [1 x Co]
  int dilation = 1;

  static Conv1dLayer Create(ParamStore* store, const std::string& name, int ci,
                            int co, int k, int dilation, Rng* rng);
  Var Forward(Tape& t, Var x) const;  // [Ci x T] -> [Co x T]
};

struct ConvT1dLayer {
  Parameter* w = nullptr;  // [Ci x Co x k]
  Parameter* b = nullptr;  // [1 x Co]
  int stride = 1;

  static ConvT1dLayer Create(ParamStore* store, const std::string& name,
                             int ci, int co, int k, int stride, Rng* rng);
  Var Forward(Tape& t, Var x) const;  // [Ci x T] -> [Co x T*stride]
};

struct Conv2dLayer {
  Parameter* w = nullptr;  // [Co x Ci x kh x kw]
  Parameter* b = nullptr;  // [1 x Co]
  int stride = 1;
  int pad = 0;

  static Conv2dLayer Create(ParamStore* store, const std::string& name, int ci,
                            int co, int k, int stride, int pad, Rng* rng);
  Var Forward(Tape& t, Var x) const;
};

// Standard sin/cos table [T x D].
Array SinusoidalPositions(int t_len, int d);

}  // namespace vts

#endif  // VTSPEECH_NN_LAYERS_H_
