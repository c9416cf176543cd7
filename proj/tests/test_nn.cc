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

#include <cmath>
#include <complex>
#include <numbers>

#include "align/ctc.h"
#include "common/rng.h"
#include "common/status.h"
#include "nn/adam.h"
#include "nn/autodiff.h"
#include "nn/checkpoint.h"
#include "nn/layers.h"
#include "testutil.h"

using namespace vts;
using testutil::MaxGradRelError;
using testutil::Randomize;

namespace {

// Random constant used to turn a tensor-valued op into a scalar loss with
// non-degenerate gradients everywhere.
Var DotWithNoise(Tape& t, Var x, unsigned seed) {
  Rng rng(seed);
  Array mix(t.value(x).shape());
  for (int64_t i = 0; i < mix.size(); ++i) mix[i] = rng.Uniform(0.5, 1.5);
  return t.SumAll(t.Mul(x, t.Constant(mix)));
}

}  // namespace

TEST_CASE("array basics") {
  Array a({2, 3});
  for (int64_t i = 0; i < a.size(); ++i) a[i] = static_cast<double>(i);
  CHECK(a.at(1, 2) == 5.0);
  Array r = a.Reshaped({3, 2});
  CHECK(r.at(2, 1) == 5.0);
  CHECK_THROWS_AS(a.Reshaped({4, 2}), ArgumentError);

  Array b({3, 2});
  b.Fill(1.0);
  Array c = MatMul(a, b);
  CHECK(c.dim(0) == 2);
  CHECK(c.dim(1) == 2);
  CHECK(c.at(0, 0) == doctest::Approx(0.0 + 1.0 + 2.0));
  CHECK(c.at(1, 1) == doctest::Approx(3.0 + 4.0 + 5.0));

  Array t = Transposed2d(a);
  CHECK(t.at(2, 0) == 2.0);
  CHECK(t.at(2, 1) == 5.0);

  const double vals[] = {std::log(0.25), std::log(0.75)};
  CHECK(LogSumExp(vals, 2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("elementwise chain gradients") {
  Rng rng(1);
  ParamStore store;
  auto* a = store.Create("a", {3, 4});
  auto* b = store.Create("b", {3, 4});
  Randomize(a, &rng, 0.5, 2.0);
  Randomize(b, &rng, 0.5, 2.0);
  auto build = [&](Tape& t) {
    Var va = t.Param(a);
    Var vb = t.Param(b);
    Var x = t.Add(t.Mul(va, vb), t.Sub(va, t.Neg(vb)));
    x = t.Div(x, t.AddScalar(t.Mul(vb, vb), 1.0));
    x = t.MulScalar(t.AddScalar(x, 0.25), 1.75);
    return t.MeanAll(x);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("unary op gradients") {
  Rng rng(2);
  ParamStore store;
  auto* a = store.Create("a", {2, 5});
  // Away from the |x| and relu kinks and the clamp edges.
  Randomize(a, &rng, 0.3, 0.9);

  auto check = [&](const std::function<Var(Tape&, Var)>& op) {
    auto build = [&](Tape& t) {
      return DotWithNoise(t, op(t, t.Param(a)), 7);
    };
    return MaxGradRelError(&store, build);
  };

  CHECK(check([](Tape& t, Var x) { return t.Abs(t.AddScalar(x, -0.6)); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Relu(t.AddScalar(x, -0.6)); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Tanh(x); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Sigmoid(x); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Exp(x); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Log(t.AddScalar(x, 0.5)); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Softplus(t.MulScalar(x, 3.0)); }) < 1e-4);
  CHECK(check([](Tape& t, Var x) { return t.Clamp(x, 0.0, 2.0); }) < 1e-4);
}

TEST_CASE("stop gradient blocks flow") {
  ParamStore store;
  auto* a = store.Create("a", {2, 2});
  a->value.Fill(1.5);
  Tape t;
  Var x = t.Param(a);
  Var loss = t.SumAll(t.Mul(t.StopGrad(x), x));
  t.Backward(loss);
  // d/dx of sg(x)*x is sg(x), not 2x.
  for (int64_t i = 0; i < a->grad.size(); ++i) {
    CHECK(a->grad[i] == doctest::Approx(1.5));
  }
}

TEST_CASE("shape op gradients") {
  Rng rng(3);
  ParamStore store;
  auto* a = store.Create("a", {4, 6});
  auto* b = store.Create("b", {2, 6});
  auto* row = store.Create("row", {1, 5});
  Randomize(a, &rng);
  Randomize(b, &rng);
  Randomize(row, &rng);

  auto build = [&](Tape& t) {
    Var va = t.Param(a);
    Var vb = t.Param(b);
    Var stacked = t.ConcatRows(va, vb);                // [6 x 6]
    Var wide = t.ConcatCols(stacked, stacked);         // [6 x 12]
    Var cut = t.SliceCols(t.SliceRows(wide, 1, 5), 2, 9);  // [4 x 7]
    Var moved = t.Transpose(t.Reshape(cut, {7, 4}));   // [4 x 7]
    // Repeated row indices exercise gradient accumulation.
    Var picked = t.GatherRows(moved, {0, 2, 2, 3});
    Var tiled = t.TileRows(t.Param(row), 3);
    Var loss1 = DotWithNoise(t, picked, 11);
    Var loss2 = DotWithNoise(t, tiled, 13);
    Var pad = t.PadZero1d(t.Param(b), 2, 3);  // [2 x 11]
    return t.Add(t.Add(loss1, loss2), DotWithNoise(t, pad, 17));
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("matmul and broadcast gradients") {
  Rng rng(4);
  ParamStore store;
  auto* a = store.Create("a", {3, 4});
  auto* b = store.Create("b", {4, 2});
  auto* row = store.Create("row", {1, 2});
  Randomize(a, &rng);
  Randomize(b, &rng);
  Randomize(row, &rng);
  auto build = [&](Tape& t) {
    Var y = t.AddRowBroadcast(t.MatMul(t.Param(a), t.Param(b)), t.Param(row));
    return DotWithNoise(t, y, 19);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("softmax rows sum to one and gradients check out") {
  Rng rng(5);
  ParamStore store;
  auto* a = store.Create("a", {3, 5});
  Randomize(a, &rng, -2.0, 2.0);

  Tape t;
  Var sm = t.SoftmaxRows(t.Param(a));
  Var lsm = t.LogSoftmaxRows(t.Param(a));
  for (int i = 0; i < 3; ++i) {
    double sum = 0.0;
    double lse = 0.0;
    for (int j = 0; j < 5; ++j) {
      sum += t.value(sm).at(i, j);
      lse += std::exp(t.value(lsm).at(i, j));
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(lse == doctest::Approx(1.0).epsilon(1e-12));
  }

  auto build_sm = [&](Tape& tt) {
    return DotWithNoise(tt, tt.SoftmaxRows(tt.Param(a)), 23);
  };
  CHECK(MaxGradRelError(&store, build_sm) < 1e-4);
  auto build_lsm = [&](Tape& tt) {
    return DotWithNoise(tt, tt.LogSoftmaxRows(tt.Param(a)), 29);
  };
  CHECK(MaxGradRelError(&store, build_lsm) < 1e-4);
}

TEST_CASE("layer norm gradients") {
  Rng rng(6);
  ParamStore store;
  auto* x = store.Create("x", {4, 6});
  auto* gamma = store.Create("gamma", {1, 6});
  auto* beta = store.Create("beta", {1, 6});
  Randomize(x, &rng, -1.0, 1.0);
  Randomize(gamma, &rng, 0.5, 1.5);
  Randomize(beta, &rng, -0.5, 0.5);
  auto build = [&](Tape& t) {
    Var y = t.LayerNormRows(t.Param(x), t.Param(gamma), t.Param(beta));
    return DotWithNoise(t, y, 31);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("conv1d forward identity and gradients") {
  // Centered delta kernel reproduces the input.
  {
    ParamStore store;
    auto* x = store.Create("x", {2, 7});
    Rng rng(8);
    Randomize(x, &rng);
    Array w({2, 2, 3});
    w.Fill(0.0);
    w.at(0, 0, 1) = 1.0;
    w.at(1, 1, 1) = 1.0;
    Array b({1, 2});
    b.Fill(0.0);
    Tape t;
    Var y = t.Conv1d(t.Param(x), t.Constant(w), t.Constant(b), 1);
    for (int64_t i = 0; i < x->value.size(); ++i) {
      CHECK(t.value(y)[i] == doctest::Approx(x->value[i]).epsilon(1e-12));
    }
  }
  Rng rng(9);
  ParamStore store;
  auto* x = store.Create("x", {2, 9});
  auto* w = store.Create("w", {3, 2, 3});
  auto* b = store.Create("b", {1, 3});
  Randomize(x, &rng);
  Randomize(w, &rng);
  Randomize(b, &rng);
  for (int dilation : {1, 2}) {
    auto build = [&](Tape& t) {
      Var y = t.Conv1d(t.Param(x), t.Param(w), t.Param(b), dilation);
      return DotWithNoise(t, y, 37);
    };
    CHECK(MaxGradRelError(&store, build) < 1e-4);
  }
}

TEST_CASE("transposed conv1d forward oracle and gradients") {
  // stride 2, kernel 4, all-one weights, input [1, 2].
  {
    Array x({1, 2});
    x[0] = 1.0;
    x[1] = 2.0;
    Array w({1, 1, 4});
    w.Fill(1.0);
    Array b({1, 1});
    b.Fill(0.0);
    Tape t;
    Var y = t.ConvTranspose1d(t.Constant(x), t.Constant(w), t.Constant(b), 2);
    REQUIRE(t.value(y).dim(1) == 4);
    CHECK(t.value(y)[0] == doctest::Approx(1.0));
    CHECK(t.value(y)[1] == doctest::Approx(3.0));
    CHECK(t.value(y)[2] == doctest::Approx(3.0));
    CHECK(t.value(y)[3] == doctest::Approx(2.0));
  }
  Rng rng(10);
  ParamStore store;
  auto* x = store.Create("x", {2, 5});
  auto* w = store.Create("w", {2, 3, 4});
  auto* b = store.Create("b", {1, 3});
  Randomize(x, &rng);
  Randomize(w, &rng);
  Randomize(b, &rng);
  auto build = [&](Tape& t) {
    Var y = t.ConvTranspose1d(t.Param(x), t.Param(w), t.Param(b), 2);
    return DotWithNoise(t, y, 41);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("conv2d forward identity and gradients") {
  {
    ParamStore store;
    auto* x = store.Create("x", {1, 1, 5, 5});
    Rng rng(11);
    Randomize(x, &rng);
    Array w({1, 1, 3, 3});
    w.Fill(0.0);
    w.at(0, 1 * 3 + 1) = 1.0;  // center tap
    Array b({1, 1});
    b.Fill(0.0);
    Tape t;
    Var y = t.Conv2d(t.Param(x), t.Constant(w), t.Constant(b), 1, 1);
    for (int64_t i = 0; i < x->value.size(); ++i) {
      CHECK(t.value(y)[i] == doctest::Approx(x->value[i]).epsilon(1e-12));
    }
  }
  Rng rng(12);
  ParamStore store;
  auto* x = store.Create("x", {2, 2, 6, 6});
  auto* w = store.Create("w", {3, 2, 3, 3});
  auto* b = store.Create("b", {1, 3});
  Randomize(x, &rng);
  Randomize(w, &rng);
  Randomize(b, &rng);
  auto build = [&](Tape& t) {
    Var y = t.Conv2d(t.Param(x), t.Param(w), t.Param(b), 2, 1);
    return DotWithNoise(t, y, 43);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("avg pool halves spatial dims and backprops evenly") {
  Rng rng(13);
  ParamStore store;
  auto* x = store.Create("x", {1, 2, 8, 8});
  Randomize(x, &rng);
  {
    Tape t;
    Var y = t.AvgPool2d(t.Param(x), 4);
    CHECK(t.value(y).dim(2) == 2);
    CHECK(t.value(y).dim(3) == 2);
  }
  auto build = [&](Tape& t) {
    return DotWithNoise(t, t.AvgPool2d(t.Param(x), 2), 47);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("ctc loss on the tape matches the standalone loss") {
  Rng rng(14);
  ParamStore store;
  auto* logits = store.Create("logits", {5, 4});
  Randomize(logits, &rng, -1.5, 0.0);
  const std::vector<int> labels = {1, 3, 3};

  Tape t;
  Var lp = t.LogSoftmaxRows(t.Param(logits));
  Var loss = t.CtcLoss(lp, labels, 0);
  FramePosterior post;
  {
    Tape probe;
    post.log_probs = probe.value(probe.LogSoftmaxRows(probe.Param(logits)));
  }
  CHECK(t.value(loss)[0] ==
        doctest::Approx(CtcNll(post, labels)).epsilon(1e-12));

  auto build = [&](Tape& tt) {
    Var p = tt.LogSoftmaxRows(tt.Param(logits));
    return tt.CtcLoss(p, labels, 0);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("stft power matches a direct dft") {
  const int n_fft = 8;
  const int hop = 4;
  const int len = 16;
  Rng rng(15);
  Array wave({1, len});
  for (int64_t i = 0; i < wave.size(); ++i) wave[i] = rng.Uniform(-1.0, 1.0);

  Tape t;
  Var sp = t.StftPower(t.Constant(wave), n_fft, hop);
  const Array& got = t.value(sp);
  const int frames = 1 + (len - n_fft) / hop;
  const int bins = n_fft / 2 + 1;
  REQUIRE(got.dim(0) == frames);
  REQUIRE(got.dim(1) == bins);

  for (int f = 0; f < frames; ++f) {
    for (int k = 0; k < bins; ++k) {
      std::complex<double> acc(0.0, 0.0);
      for (int i = 0; i < n_fft; ++i) {
        const double win =
            0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * i / n_fft));
        const double theta = -2.0 * std::numbers::pi * k * i / n_fft;
        acc += wave[f * hop + i] * win *
               std::complex<double>(std::cos(theta), std::sin(theta));
      }
      CHECK(got.at(f, k) == doctest::Approx(std::norm(acc)).epsilon(1e-9));
    }
  }
}

TEST_CASE("stft power gradients") {
  Rng rng(16);
  ParamStore store;
  auto* wave = store.Create("wave", {1, 24});
  Randomize(wave, &rng, -0.8, 0.8);
  auto build = [&](Tape& t) {
    Var sp = t.StftPower(t.Param(wave), 8, 4);
    return DotWithNoise(t, sp, 53);
  };
  CHECK(MaxGradRelError(&store, build, 1e-6) < 1e-4);
}

TEST_CASE("embedding gathers rows and accumulates repeated ids") {
  Rng rng(17);
  ParamStore store;
  Embedding emb = Embedding::Create(&store, "emb", 6, 3, &rng);
  auto build = [&](Tape& t) {
    Var e = emb.Forward(t, {1, 4, 1, 0});
    return DotWithNoise(t, e, 59);
  };
  CHECK(MaxGradRelError(&store, build) < 1e-4);
}

TEST_CASE("transformer block keeps shape and backprops") {
  Rng rng(18);
  ParamStore store;
  TransformerBlock block = TransformerBlock::Create(&store, "blk", 8, 2, 16, &rng);
  auto* x = store.Create("x", {5, 8});
  Randomize(x, &rng, -0.5, 0.5);
  {
    Tape t;
    Var y = block.Forward(t, t.Param(x));
    CHECK(t.value(y).dim(0) == 5);
    CHECK(t.value(y).dim(1) == 8);
  }
  auto build = [&](Tape& t) {
    return DotWithNoise(t, block.Forward(t, t.Param(x)), 61);
  };
  CHECK(MaxGradRelError(&store, build, 1e-5) < 1e-3);
}

TEST_CASE("sinusoidal positions follow the sin cos layout") {
  Array pos = SinusoidalPositions(10, 6);
  CHECK(pos.dim(0) == 10);
  CHECK(pos.dim(1) == 6);
  CHECK(pos.at(0, 0) == doctest::Approx(0.0));
  CHECK(pos.at(0, 1) == doctest::Approx(1.0));
  CHECK(pos.at(1, 0) == doctest::Approx(std::sin(1.0)));
  CHECK(pos.at(1, 1) == doctest::Approx(std::cos(1.0)));
  const double rate = std::pow(10000.0, -2.0 / 6.0);
  CHECK(pos.at(3, 2) == doctest::Approx(std::sin(3.0 * rate)));
}

TEST_CASE("adam minimizes a quadratic and clears gradients") {
  ParamStore store;
  auto* x = store.Create("x", {1, 1});
  x->value[0] = -4.0;
  Adam opt(store.All());
  for (int i = 0; i < 400; ++i) {
    Tape t;
    Var v = t.Param(x);
    Var err = t.AddScalar(v, -3.0);
    Var loss = t.SumAll(t.Mul(err, err));
    t.Backward(loss);
    opt.Step(0.05);
  }
  CHECK(x->value[0] == doctest::Approx(3.0).epsilon(1e-2));
  CHECK(x->grad[0] == 0.0);
  CHECK(opt.step_count() == 400);
}

TEST_CASE("linear regression fits with the full training loop") {
  Rng rng(19);
  ParamStore store;
  Linear lin = Linear::Create(&store, "lin", 1, 1, &rng);
  Adam opt(store.All());
  Array xs({8, 1});
  Array ys({8, 1});
  for (int i = 0; i < 8; ++i) {
    xs.at(i, 0) = i * 0.25 - 1.0;
    ys.at(i, 0) = 2.0 * xs.at(i, 0) + 1.0;
  }
  double last = 1e9;
  for (int step = 0; step < 600; ++step) {
    Tape t;
    Var pred = lin.Forward(t, t.Constant(xs));
    Var diff = t.Sub(pred, t.Constant(ys));
    Var loss = t.MeanAll(t.Mul(diff, diff));
    t.Backward(loss);
    opt.Step(0.02);
    last = t.value(loss)[0];
  }
  CHECK(last < 1e-4);
  CHECK(lin.w->value[0] == doctest::Approx(2.0).epsilon(0.05));
  CHECK(lin.b->value[0] == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("param store enforces unique names") {
  ParamStore store;
  store.Create("dup", {1, 1});
  CHECK_THROWS_AS(store.Create("dup", {2, 2}), ArgumentError);
  CHECK(store.Find("dup") != nullptr);
  CHECK(store.Find("missing") == nullptr);
}

TEST_CASE("checkpoint round trips values and metadata") {
  testutil::TempDir dir("ckpt");
  Rng rng(20);
  ParamStore store;
  auto* a = store.Create("enc.w", {3, 4});
  auto* b = store.Create("enc.b", {1, 4});
  Randomize(a, &rng);
  Randomize(b, &rng);

  nlohmann::ordered_json meta;
  meta["kind"] = "probe";
  meta["step"] = 123;
  const std::string path = dir.file("model.ckpt");
  SaveCheckpoint(path, meta, store.All());

  auto got = ReadCheckpointMeta(path);
  CHECK(got["kind"] == "probe");
  CHECK(got["step"] == 123);

  ParamStore fresh;
  auto* a2 = fresh.Create("enc.w", {3, 4});
  auto* b2 = fresh.Create("enc.b", {1, 4});
  LoadCheckpointParams(path, fresh.All());
  for (int64_t i = 0; i < a->value.size(); ++i) {
    CHECK(a2->value[i] == a->value[i]);
  }
  for (int64_t i = 0; i < b->value.size(); ++i) {
    CHECK(b2->value[i] == b->value[i]);
  }

  ParamStore wrong;
  wrong.Create("enc.w", {4, 3});
  wrong.Create("enc.b", {1, 4});
  CHECK_THROWS_AS(LoadCheckpointParams(path, wrong.All()), IncompatibleError);

  ParamStore renamed;
  renamed.Create("enc.weight", {3, 4});
  renamed.Create("enc.b", {1, 4});
  CHECK_THROWS_AS(LoadCheckpointParams(path, renamed.All()),
                  IncompatibleError);

  CHECK_THROWS_AS(ReadCheckpointMeta(dir.file("missing.ckpt")), IoError);
}
