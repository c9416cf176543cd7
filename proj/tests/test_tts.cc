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

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "common/rng.h"
#include "common/status.h"
#include "corpus/synthetic.h"
#include "nn/adam.h"
#include "nn/checkpoint.h"
#include "testutil.h"
#include "tts/tts.h"

using namespace vts;
using namespace vts::testutil;

namespace {

TtsConfig SmallConfig() {
  TtsConfig c;
  c.n_mels = 40;
  c.d_z = 8;
  c.prior_layers = 1;
  c.prior_width = 32;
  c.prior_heads = 4;
  c.prior_ffn = 64;
  c.posterior_channels = 24;
  c.flow_layers = 4;
  c.flow_hidden = 24;
  c.sdp_hidden = 16;
  c.decoder_channels = {24, 12, 8, 6, 4};
  c.decoder_strides = {4, 4, 4, 4};
  c.speaker_dim = 8;
  c.alphabet = TokenAlphabet::WithWordBoundary(DefaultPhonemeInventory());
  c.speakers = {"spk0", "spk1"};
  c.lr_peak = 3e-4;
  c.total_steps = 120;
  c.seed = 77;
  return c;
}

Array RandomMatrix(int r, int c, Rng* rng, double lo = -1.0, double hi = 1.0) {
  Array a({r, c});
  for (int i = 0; i < a.size(); ++i) a[i] = rng->Uniform(lo, hi);
  return a;
}

void RandomizeFlow(TtsModel* model, Rng* rng, double scale) {
  for (const auto& p : model->params().params()) {
    if (p->name.rfind("flow.", 0) == 0) Randomize(p.get(), rng, -scale, scale);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Config.

TEST_CASE("tts config json round trip and fingerprint") {
  TtsConfig c = SmallConfig();
  TtsConfig d = TtsConfig::FromJson(c.ToJson());
  CHECK(d.ToJson() == c.ToJson());
  CHECK(d.Fingerprint() == c.Fingerprint());
  d.hop = 64;
  CHECK(d.Fingerprint() != c.Fingerprint());
}

TEST_CASE("tts config validation") {
  TtsConfig c = SmallConfig();
  c.decoder_strides = {4, 4, 4};  // product 64 != hop 256
  CHECK_THROWS_AS(ValidateTtsConfig(c), ArgumentError);

  c = SmallConfig();
  c.d_z = 7;
  CHECK_THROWS_AS(ValidateTtsConfig(c), ArgumentError);

  c = SmallConfig();
  c.speakers = {"a", "a"};
  CHECK_THROWS_AS(ValidateTtsConfig(c), ArgumentError);

  c = SmallConfig();
  c.alphabet = TokenAlphabet::WithBlank(DefaultPhonemeInventory());
  CHECK_THROWS_AS(ValidateTtsConfig(c), ArgumentError);

  c = SmallConfig();
  c.n_fft = 1000;  // not a multiple of hop
  CHECK_THROWS_AS(ValidateTtsConfig(c), ArgumentError);
}

// ---------------------------------------------------------------------------
// Coupling flow.

TEST_CASE("flow is the exact identity at initialization") {
  TtsModel model(SmallConfig());
  Rng rng(5);
  Array z = RandomMatrix(7, 8, &rng, -2.0, 2.0);
  double log_det = 1.0;
  Array u = model.FlowForwardValues(z, 0, &log_det);
  double worst = 0.0;
  for (int i = 0; i < z.size(); ++i) worst = std::max(worst, std::abs(u[i] - z[i]));
  CHECK(worst <= 1e-6);
  CHECK(std::abs(log_det) <= 1e-6);
}

TEST_CASE("flow round trip recovers latents after randomization") {
  TtsModel model(SmallConfig());
  Rng rng(99);
  RandomizeFlow(&model, &rng, 0.8);
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int t_len = 1 + static_cast<int>(rng.UniformInt(0, 5));
    const int spk = static_cast<int>(rng.UniformInt(0, 1));
    Array z = RandomMatrix(t_len, 8, &rng, -3.0, 3.0);
    Array u = model.FlowForwardValues(z, spk);
    Array back = model.FlowInverseValues(u, spk);
    for (int i = 0; i < z.size(); ++i)
      worst = std::max(worst, std::abs(back[i] - z[i]));
  }
  CHECK(worst < 1e-4);
}

TEST_CASE("flow log det matches a numerical jacobian") {
  TtsConfig c = SmallConfig();
  c.d_z = 4;
  c.flow_hidden = 16;
  TtsModel model(c);
  Rng rng(42);
  RandomizeFlow(&model, &rng, 0.7);

  const int t_len = 3;
  const int n = t_len * 4;
  Array z = RandomMatrix(t_len, 4, &rng, -1.5, 1.5);
  double log_det = 0.0;
  model.FlowForwardValues(z, 1, &log_det);

  // The full map on vec(z) is block-diagonal over frames; build its FD
  // Jacobian and take log |det| directly.
  const double h = 1e-5;
  Eigen::MatrixXd jac(n, n);
  for (int q = 0; q < n; ++q) {
    Array zp = z, zm = z;
    zp[q] += h;
    zm[q] -= h;
    Array up = model.FlowForwardValues(zp, 1);
    Array um = model.FlowForwardValues(zm, 1);
    for (int p = 0; p < n; ++p) jac(p, q) = (up[p] - um[p]) / (2.0 * h);
  }
  const double numeric = std::log(std::abs(jac.fullPivLu().determinant()));
  CHECK(std::abs(numeric - log_det) < 1e-3);
}

// ---------------------------------------------------------------------------
// Alignment likelihood and KL.

TEST_CASE("mas loglike peaks at the prior mean under unit variance") {
  Rng rng(3);
  const int d = 8;
  LatentParams prior;
  prior.mu = RandomMatrix(1, d, &rng);
  prior.log_std = Array({1, d});
  Array frames = prior.mu;
  Array out = MasLogLikelihood(prior, frames);
  CHECK(out.dim(0) == 1);
  CHECK(out.dim(1) == 1);
  CHECK(out.at(0, 0) ==
        doctest::Approx(-0.5 * d * std::log(2.0 * M_PI)).epsilon(1e-12));
}

TEST_CASE("mas loglike matches a direct density computation") {
  Rng rng(17);
  const int tx = 3, ty = 5, d = 4;
  LatentParams prior;
  prior.mu = RandomMatrix(tx, d, &rng);
  prior.log_std = RandomMatrix(tx, d, &rng, -1.0, 1.0);
  Array frames = RandomMatrix(ty, d, &rng, -2.0, 2.0);
  Array out = MasLogLikelihood(prior, frames);
  for (int i = 0; i < tx; ++i) {
    for (int j = 0; j < ty; ++j) {
      double expect = 0.0;
      for (int k = 0; k < d; ++k) {
        const double sd = std::exp(prior.log_std.at(i, k));
        const double z = (frames.at(j, k) - prior.mu.at(i, k)) / sd;
        expect += -0.5 * std::log(2.0 * M_PI) - std::log(sd) - 0.5 * z * z;
      }
      CHECK(out.at(i, j) == doctest::Approx(expect).epsilon(1e-8));
    }
  }
}

TEST_CASE("kl term closed-form oracles") {
  Tape tape;
  Rng rng(8);
  Array mu = RandomMatrix(4, 3, &rng);
  Array logs = RandomMatrix(4, 3, &rng, -0.5, 0.5);
  // Identical distributions.
  Var zero = KlTerm(tape, tape.Constant(mu), tape.Constant(logs),
                    tape.Constant(mu), tape.Constant(logs));
  CHECK(tape.value(zero)[0] == doctest::Approx(0.0).epsilon(1e-12));

  // KL(N(1,1) || N(0,1)) in one dimension is 1/2.
  Array one({1, 1});
  one[0] = 1.0;
  Array zeros({1, 1});
  Var half = KlTerm(tape, tape.Constant(zeros), tape.Constant(zeros),
                    tape.Constant(one), tape.Constant(zeros));
  CHECK(tape.value(half)[0] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("kl term is non-negative on random inputs") {
  Rng rng(21);
  for (int trial = 0; trial < 1000; ++trial) {
    Tape tape;
    const int t_len = 1 + static_cast<int>(rng.UniformInt(0, 3));
    const int d = 1 + static_cast<int>(rng.UniformInt(0, 3));
    Var kl = KlTerm(tape, tape.Constant(RandomMatrix(t_len, d, &rng, -2, 2)),
                    tape.Constant(RandomMatrix(t_len, d, &rng, -1.5, 1.5)),
                    tape.Constant(RandomMatrix(t_len, d, &rng, -2, 2)),
                    tape.Constant(RandomMatrix(t_len, d, &rng, -1.5, 1.5)));
    CHECK(tape.value(kl)[0] >= -1e-12);
  }
}

TEST_CASE("kl term gradients match finite differences") {
  ParamStore store;
  Rng rng(31);
  Parameter* mu_p = store.Create("mu_p", {3, 4});
  Parameter* logs_p = store.Create("logs_p", {3, 4});
  Parameter* mu_u = store.Create("mu_u", {3, 4});
  Parameter* logs_q = store.Create("logs_q", {3, 4});
  for (Parameter* p : store.All()) Randomize(p, &rng, -0.8, 0.8);
  const double err = MaxGradRelError(&store, [&](Tape& t) {
    return KlTerm(t, t.Param(mu_p), t.Param(logs_p), t.Param(mu_u),
                  t.Param(logs_q));
  });
  CHECK(err < 1e-4);
}

// ---------------------------------------------------------------------------
// Expansion and decoding.

TEST_CASE("expand by durations repeats rows in place") {
  Array rows({2, 2});
  rows.at(0, 0) = 1.0;
  rows.at(0, 1) = 2.0;
  rows.at(1, 0) = 3.0;
  rows.at(1, 1) = 4.0;
  Array out = ExpandByDurations(rows, {2, 1});
  REQUIRE(out.dim(0) == 3);
  CHECK(out.at(0, 0) == 1.0);
  CHECK(out.at(1, 0) == 1.0);
  CHECK(out.at(1, 1) == 2.0);
  CHECK(out.at(2, 0) == 3.0);

  CHECK_THROWS_AS(ExpandByDurations(rows, {0, 2}), ArgumentError);
  CHECK_THROWS_AS(ExpandByDurations(rows, {1}), ArgumentError);
}

TEST_CASE("decoder emits exactly frames times hop bounded samples") {
  TtsModel model(SmallConfig());
  Rng rng(12);
  Array z = RandomMatrix(5, 8, &rng, -2.0, 2.0);
  Waveform w = model.DecodeWaveformValues(z, 0);
  CHECK(w.samples.size() == 5u * 256u);
  CHECK(w.sample_rate == 16000);
  for (double s : w.samples) {
    CHECK(std::abs(s) <= 1.0);
    CHECK(std::isfinite(s));
  }
  Waveform silent = model.DecodeWaveformValues(Array({3, 8}), 1);
  CHECK(silent.samples.size() == 3u * 256u);
}

TEST_CASE("log mel of digital silence is the floor everywhere") {
  TtsConfig c = SmallConfig();
  Tape tape;
  Var mel = LogMelOnTape(tape, tape.Constant(Array({1, 2048})), c);
  const Array& v = tape.value(mel);
  REQUIRE(v.dim(0) == 5);  // 1 + (2048 - 1024) / 256
  REQUIRE(v.dim(1) == c.n_mels);
  for (int i = 0; i < v.size(); ++i)
    CHECK(v[i] == doctest::Approx(std::log(1e-10)).epsilon(1e-12));
}

// ---------------------------------------------------------------------------
// Prior, posterior, speakers.

TEST_CASE("prior encoder shapes, clamps and speaker conditioning") {
  TtsModel model(SmallConfig());
  std::vector<int> ids = {0, 3, 8, 1, 5};
  PriorOutput a = model.PriorEncodeValues(ids, 0);
  CHECK(a.params.mu.dim(0) == 5);
  CHECK(a.params.mu.dim(1) == 8);
  CHECK(a.hiddens.dim(1) == 32);
  for (int i = 0; i < a.params.log_std.size(); ++i) {
    CHECK(a.params.log_std[i] >= kLogStdLo);
    CHECK(a.params.log_std[i] <= kLogStdHi);
  }
  PriorOutput b = model.PriorEncodeValues(ids, 1);
  double diff = 0.0;
  for (int i = 0; i < a.params.mu.size(); ++i)
    diff = std::max(diff, std::abs(a.params.mu[i] - b.params.mu[i]));
  CHECK(diff > 1e-6);  // speakers must change the prior

  PriorOutput again = model.PriorEncodeValues(ids, 0);
  for (int i = 0; i < a.params.mu.size(); ++i)
    CHECK(again.params.mu[i] == a.params.mu[i]);

  Tape tape;
  Var spk = model.SpeakerEmbed(tape, 0);
  CHECK_THROWS_AS(model.PriorEncode(tape, {0, 999}, spk), ArgumentError);
  CHECK_THROWS_AS(model.PriorEncode(tape, {}, spk), ArgumentError);
  CHECK_THROWS_AS(model.SpeakerIndex("ghost"), ArgumentError);
  CHECK(model.SpeakerIndex("spk1") == 1);
}

TEST_CASE("posterior encoder shapes and input checks") {
  TtsModel model(SmallConfig());
  Rng rng(4);
  Tape tape;
  Var spk = model.SpeakerEmbed(tape, 0);
  Var mel = tape.Constant(RandomMatrix(10, 40, &rng, -5.0, 1.0));
  auto post = model.PosteriorEncode(tape, mel, spk);
  CHECK(tape.value(post.mu).dim(0) == 10);
  CHECK(tape.value(post.mu).dim(1) == 8);
  CHECK(tape.value(post.log_std).dim(0) == 10);

  Var bad = tape.Constant(RandomMatrix(10, 39, &rng));
  CHECK_THROWS_AS(model.PosteriorEncode(tape, bad, spk), ArgumentError);
}

// ---------------------------------------------------------------------------
// Stochastic duration predictor.

TEST_CASE("sdp sample contracts") {
  TtsModel model(SmallConfig());
  Rng rng(7);
  Array hiddens = RandomMatrix(6, 32, &rng);
  std::vector<int> a = model.SdpSample(hiddens, 0, 0.0, nullptr);
  REQUIRE(a.size() == 6u);
  for (int d : a) CHECK(d >= 1);
  // Temperature zero is deterministic.
  std::vector<int> b = model.SdpSample(hiddens, 0, 0.0, nullptr);
  CHECK(a == b);

  CHECK_THROWS_AS(model.SdpSample(hiddens, 0, -0.5, &rng), ArgumentError);
  CHECK_THROWS_AS(model.SdpSample(hiddens, 0, 1.0, nullptr), ArgumentError);
}

TEST_CASE("sdp learns a constant duration and mode-samples near it") {
  TtsModel model(SmallConfig());
  Rng rng(64);
  Array hiddens = RandomMatrix(5, 32, &rng);
  std::vector<int> durations = {6, 6, 6, 6, 6};

  auto loss_at = [&]() {
    Tape tape;
    Var spk = model.SpeakerEmbed(tape, 0);
    Var loss = model.SdpLoss(tape, tape.Constant(hiddens), spk, durations);
    return tape.value(loss)[0];
  };
  const double before = loss_at();

  Adam opt(model.params().All(), {});
  for (int step = 0; step < 400; ++step) {
    Tape tape;
    Var spk = model.SpeakerEmbed(tape, 0);
    Var loss = model.SdpLoss(tape, tape.Constant(hiddens), spk, durations);
    tape.Backward(loss);
    opt.Step(5e-3);
  }
  CHECK(loss_at() < before);

  std::vector<int> mode = model.SdpSample(hiddens, 0, 0.0, nullptr);
  for (int d : mode) {
    CHECK(d >= 5);
    CHECK(d <= 7);
  }

  Tape tape;
  Var spk = model.SpeakerEmbed(tape, 0);
  CHECK_THROWS_AS(model.SdpLoss(tape, tape.Constant(hiddens), spk, {6, 6}),
                  ArgumentError);
  CHECK_THROWS_AS(
      model.SdpLoss(tape, tape.Constant(hiddens), spk, {6, 6, 6, 6, 0}),
      ArgumentError);
}

// ---------------------------------------------------------------------------
// Persistence.

TEST_CASE("tts checkpoint round trip preserves behaviour") {
  TempDir dir("tts_ckpt");
  TtsModel model(SmallConfig());
  Rng rng(15);
  RandomizeFlow(&model, &rng, 0.5);
  model.Save(dir.file("m.ckpt"), 7, "state");

  auto loaded = TtsModel::Load(dir.file("m.ckpt"));
  std::vector<int> ids = {2, 8, 4};
  PriorOutput a = model.PriorEncodeValues(ids, 1);
  PriorOutput b = loaded->PriorEncodeValues(ids, 1);
  for (int i = 0; i < a.params.mu.size(); ++i)
    CHECK(a.params.mu[i] == doctest::Approx(b.params.mu[i]).epsilon(1e-12));

  Array z = RandomMatrix(4, 8, &rng);
  Array ua = model.FlowForwardValues(z, 0);
  Array ub = loaded->FlowForwardValues(z, 0);
  for (int i = 0; i < ua.size(); ++i)
    CHECK(ua[i] == doctest::Approx(ub[i]).epsilon(1e-12));

  nlohmann::ordered_json meta = ReadCheckpointMeta(dir.file("m.ckpt"));
  CHECK(meta.at("kind") == "tts");
  CHECK(meta.at("step") == 7);

  // A checkpoint of a different kind must be rejected.
  nlohmann::ordered_json other;
  other["kind"] = "recognizer";
  SaveCheckpoint(dir.file("other.ckpt"), other, {});
  CHECK_THROWS_AS(TtsModel::Load(dir.file("other.ckpt")), IncompatibleError);
  CHECK_THROWS_AS(TtsModel::Load(dir.file("missing.ckpt")), IoError);
}

// ---------------------------------------------------------------------------
// Training.

namespace {

SyntheticCorpus MakeCorpus(TempDir* dir, uint64_t seed, int speakers, int utts) {
  SyntheticCorpusSpec spec;
  spec.seed = seed;
  spec.num_speakers = speakers;
  spec.utterances_per_speaker = utts;
  spec.frame_size = 48;
  spec.out_dir = dir->file("corpus");
  return GenerateSyntheticCorpus(spec);
}

std::vector<std::vector<double>> ReadLossCsv(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::string line;
  std::getline(in, line);
  REQUIRE(line == "step,recon,kl,dur,total");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    REQUIRE(row.size() == 5u);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("tts training runs, logs and checkpoints deterministically") {
  TempDir dir("tts_train");
  SyntheticCorpus corpus = MakeCorpus(&dir, 301, 2, 2);
  Lexicon lex = Lexicon::Load(corpus.lexicon_path);

  TtsConfig config = SmallConfig();
  config.speakers = corpus.manifest.Speakers();
  config.total_steps = 120;

  TtsTrainOptions opts;
  opts.out_dir = dir.file("run_a");
  std::filesystem::create_directories(opts.out_dir);
  opts.quiet = true;
  TtsTrainResult a = TrainTts(corpus.manifest, lex, config, opts);

  REQUIRE(a.total_loss.size() == 120u);
  for (double v : a.total_loss) CHECK(std::isfinite(v));
  auto rows = ReadLossCsv(a.loss_log_path);
  REQUIRE(rows.size() == 120u);
  CHECK(rows[5][0] == 6.0);

  auto model = TtsModel::Load(a.checkpoint_path);
  CHECK(model->config().Fingerprint() == config.Fingerprint());
  // Frozen duration predictor remains usable from the checkpoint alone.
  PriorOutput prior = model->PriorEncodeValues({0, 1, 2}, 0);
  std::vector<int> durs = model->SdpSample(prior.hiddens, 0, 0.0, nullptr);
  CHECK(durs.size() == 3u);

  TtsTrainOptions opts_b;
  opts_b.out_dir = dir.file("run_b");
  std::filesystem::create_directories(opts_b.out_dir);
  opts_b.quiet = true;
  TtsTrainResult b = TrainTts(corpus.manifest, lex, config, opts_b);
  REQUIRE(b.total_loss.size() == a.total_loss.size());
  for (size_t i = 0; i < a.total_loss.size(); ++i)
    CHECK(a.total_loss[i] == b.total_loss[i]);
}

TEST_CASE("tts training reduces reconstruction loss on a tiny corpus") {
  TempDir dir("tts_overfit");
  SyntheticCorpus corpus = MakeCorpus(&dir, 302, 1, 2);
  Lexicon lex = Lexicon::Load(corpus.lexicon_path);

  TtsConfig config = SmallConfig();
  config.speakers = corpus.manifest.Speakers();
  config.total_steps = 400;

  TtsTrainOptions opts;
  opts.out_dir = dir.file("run");
  std::filesystem::create_directories(opts.out_dir);
  opts.quiet = true;
  TtsTrainResult r = TrainTts(corpus.manifest, lex, config, opts);

  auto rows = ReadLossCsv(r.loss_log_path);
  REQUIRE(rows.size() == 400u);
  auto mean_col = [&](size_t lo, size_t hi, int col) {
    double s = 0.0;
    for (size_t i = lo; i < hi; ++i) s += rows[i][col];
    return s / (hi - lo);
  };
  CHECK(mean_col(350, 400, 1) < mean_col(0, 50, 1));   // recon
  CHECK(mean_col(350, 400, 4) < mean_col(0, 50, 4));   // total
}

TEST_CASE("tts training aborts cleanly on bad inputs") {
  TempDir dir("tts_abort");
  SyntheticCorpus corpus = MakeCorpus(&dir, 303, 1, 2);
  Lexicon lex = Lexicon::Load(corpus.lexicon_path);

  TtsConfig config = SmallConfig();
  config.speakers = corpus.manifest.Speakers();

  TtsTrainOptions opts;
  opts.out_dir = dir.file("run");
  std::filesystem::create_directories(opts.out_dir);
  opts.quiet = true;

  SUBCASE("empty train split") {
    Manifest empty;
    CHECK_THROWS_AS(TrainTts(empty, lex, config, opts), ArgumentError);
  }

  SUBCASE("speaker missing from the configured table") {
    TtsConfig bad = config;
    bad.speakers = {"nobody"};
    CHECK_THROWS_AS(TrainTts(corpus.manifest, lex, bad, opts), ArgumentError);
  }

  SUBCASE("transcript too long for the audio") {
    Manifest m;
    for (const auto& e : corpus.manifest.entries()) {
      if (e.split != "train") continue;
      ManifestEntry crowded = e;
      const std::string word = e.transcript.substr(0, e.transcript.find(' '));
      std::string text = word;
      for (int i = 0; i < 60; ++i) text += " " + word;
      crowded.transcript = text;
      m.entries().push_back(crowded);
      break;
    }
    REQUIRE(m.entries().size() == 1u);
    CHECK_THROWS_AS(TrainTts(m, lex, config, opts), InfeasibleError);
  }

  SUBCASE("missing out dir") {
    TtsTrainOptions bad;
    CHECK_THROWS_AS(TrainTts(corpus.manifest, lex, config, bad), ArgumentError);
  }
}
