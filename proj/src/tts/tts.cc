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

#include "tts/tts.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "common/status.h"
#include "corpus/mel.h"
#include "nn/adam.h"
#include "nn/checkpoint.h"

namespace vts {

namespace {
constexpr double kLog2Pi = 1.8378770664093453;  // ln(2*pi)
constexpr double kFlowScaleBound = 1.5;         // |log s| cap per coupling
constexpr double kSdpScaleBound = 2.0;
constexpr double kSdpLogDurCap = 9.0;           // exp cap when sampling
}  // namespace

// ---------------------------------------------------------------------------
// Config.

nlohmann::ordered_json TtsConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["sample_rate"] = sample_rate;
  j["n_fft"] = n_fft;
  j["hop"] = hop;
  j["n_mels"] = n_mels;
  j["d_z"] = d_z;
  j["prior_layers"] = prior_layers;
  j["prior_width"] = prior_width;
  j["prior_heads"] = prior_heads;
  j["prior_ffn"] = prior_ffn;
  j["posterior_channels"] = posterior_channels;
  j["flow_layers"] = flow_layers;
  j["flow_hidden"] = flow_hidden;
  j["sdp_hidden"] = sdp_hidden;
  j["decoder_channels"] = decoder_channels;
  j["decoder_strides"] = decoder_strides;
  j["speaker_dim"] = speaker_dim;
  j["alphabet_tokens"] = alphabet.tokens();
  j["alphabet_blank"] = alphabet.blank_index();
  j["speakers"] = speakers;
  j["lr_peak"] = lr_peak;
  j["warmup_fraction"] = warmup_fraction;
  j["total_steps"] = total_steps;
  j["w_recon"] = w_recon;
  j["w_kl"] = w_kl;
  j["w_dur"] = w_dur;
  j["seed"] = seed;
  return j;
}

TtsConfig TtsConfig::FromJson(const nlohmann::ordered_json& j) {
  TtsConfig c;
  c.sample_rate = j.at("sample_rate").get<int>();
  c.n_fft = j.at("n_fft").get<int>();
  c.hop = j.at("hop").get<int>();
  c.n_mels = j.at("n_mels").get<int>();
  c.d_z = j.at("d_z").get<int>();
  c.prior_layers = j.at("prior_layers").get<int>();
  c.prior_width = j.at("prior_width").get<int>();
  c.prior_heads = j.at("prior_heads").get<int>();
  c.prior_ffn = j.at("prior_ffn").get<int>();
  c.posterior_channels = j.at("posterior_channels").get<int>();
  c.flow_layers = j.at("flow_layers").get<int>();
  c.flow_hidden = j.at("flow_hidden").get<int>();
  c.sdp_hidden = j.at("sdp_hidden").get<int>();
  c.decoder_channels = j.at("decoder_channels").get<std::vector<int>>();
  c.decoder_strides = j.at("decoder_strides").get<std::vector<int>>();
  c.speaker_dim = j.at("speaker_dim").get<int>();
  c.alphabet = TokenAlphabet(j.at("alphabet_tokens").get<std::vector<std::string>>(),
                             j.at("alphabet_blank").get<int>());
  c.speakers = j.at("speakers").get<std::vector<std::string>>();
  c.lr_peak = j.at("lr_peak").get<double>();
  c.warmup_fraction = j.at("warmup_fraction").get<double>();
  c.total_steps = j.at("total_steps").get<int>();
  c.w_recon = j.at("w_recon").get<double>();
  c.w_kl = j.at("w_kl").get<double>();
  c.w_dur = j.at("w_dur").get<double>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

uint64_t TtsConfig::Fingerprint() const { return HashString(ToJson().dump()); }

void ValidateTtsConfig(const TtsConfig& config) {
  VTS_CHECK_ARG(config.sample_rate > 0, "sample_rate must be positive");
  VTS_CHECK_ARG(config.n_fft >= 16 && config.hop >= 1, "bad stft geometry");
  VTS_CHECK_ARG(config.n_fft % config.hop == 0,
                "n_fft must be a multiple of hop so mel frames align to the "
                "decoder sample grid");
  VTS_CHECK_ARG(config.n_mels >= 1, "n_mels must be positive");
  VTS_CHECK_ARG(config.d_z >= 2 && config.d_z % 2 == 0,
                "d_z must be even (coupling splits it in half)");
  VTS_CHECK_ARG(config.prior_layers >= 1 && config.prior_width >= 1,
                "prior encoder needs at least one block");
  VTS_CHECK_ARG(config.prior_width % config.prior_heads == 0,
                "prior_width must divide evenly among heads");
  VTS_CHECK_ARG(config.posterior_channels >= 1, "posterior_channels must be positive");
  VTS_CHECK_ARG(config.flow_layers >= 1 && config.flow_hidden >= 1,
                "flow needs at least one coupling");
  VTS_CHECK_ARG(config.sdp_hidden >= 1, "sdp_hidden must be positive");
  VTS_CHECK_ARG(!config.decoder_strides.empty() &&
                    config.decoder_channels.size() == config.decoder_strides.size() + 1,
                "decoder needs channels for every upsample stage plus input");
  int up = 1;
  for (int s : config.decoder_strides) {
    VTS_CHECK_ARG(s >= 2, "decoder strides must be >= 2");
    up *= s;
  }
  VTS_CHECK_ARG(up == config.hop,
                "decoder upsample product must equal hop so waveform length "
                "is exactly frames * hop");
  VTS_CHECK_ARG(config.speaker_dim >= 1, "speaker_dim must be positive");
  VTS_CHECK_ARG(config.alphabet.size() > 0, "alphabet is empty");
  VTS_CHECK_ARG(!config.alphabet.has_blank(),
                "tts alphabet must not contain a blank token");
  VTS_CHECK_ARG(!config.speakers.empty(), "speaker list is empty");
  std::set<std::string> uniq(config.speakers.begin(), config.speakers.end());
  VTS_CHECK_ARG(uniq.size() == config.speakers.size(), "duplicate speaker id");
  VTS_CHECK_ARG(config.lr_peak > 0.0, "lr_peak must be positive");
  VTS_CHECK_ARG(config.warmup_fraction > 0.0 && config.warmup_fraction < 1.0,
                "warmup_fraction must lie in (0, 1)");
  VTS_CHECK_ARG(config.total_steps >= 1, "total_steps must be positive");
  VTS_CHECK_ARG(config.w_recon >= 0.0 && config.w_kl >= 0.0 && config.w_dur >= 0.0,
                "loss weights must be non-negative");
}

namespace {

// Triangular warmup-decay, same shape as the recognizer schedule.
double TtsLrSchedule(int step, const TtsConfig& config) {
  const double peak_at =
      std::max(1.0, config.warmup_fraction * config.total_steps);
  if (step <= peak_at) return config.lr_peak * step / peak_at;
  const double denom = std::max(1.0, config.total_steps - peak_at);
  return config.lr_peak * std::max(0.0, static_cast<double>(config.total_steps - step)) / denom;
}

}  // namespace

// ---------------------------------------------------------------------------
// Free ops.

Array MasLogLikelihood(const LatentParams& prior, const Array& frames) {
  VTS_CHECK_ARG(prior.mu.ndim() == 2 && frames.ndim() == 2, "expected matrices");
  const int tx = prior.mu.dim(0), d = prior.mu.dim(1);
  const int ty = frames.dim(0);
  VTS_CHECK_ARG(prior.log_std.dim(0) == tx && prior.log_std.dim(1) == d,
                "prior mu/log_std shape mismatch");
  VTS_CHECK_ARG(frames.dim(1) == d, "frame dimensionality mismatch");
  Array out({tx, ty});
  for (int i = 0; i < tx; ++i) {
    // Per-row constant part: sum of -log_std - ln(2*pi)/2.
    double base = 0.0;
    for (int k = 0; k < d; ++k) base += -prior.log_std.at(i, k) - 0.5 * kLog2Pi;
    for (int j = 0; j < ty; ++j) {
      double quad = 0.0;
      for (int k = 0; k < d; ++k) {
        const double inv_std = std::exp(-prior.log_std.at(i, k));
        const double z = (frames.at(j, k) - prior.mu.at(i, k)) * inv_std;
        quad += z * z;
      }
      out.at(i, j) = base - 0.5 * quad;
    }
  }
  return out;
}

Var KlTerm(Tape& tape, Var mu_p, Var logs_p, Var mu_u, Var logs_q) {
  const Array& a = tape.value(mu_p);
  VTS_CHECK_ARG(a.ndim() == 2, "kl expects matrices");
  const int ty = a.dim(0);
  // KL(N(mu_u, s_q) || N(mu_p, s_p)) elementwise, summed over channels,
  // averaged over frames.
  Var diff = tape.Sub(mu_u, mu_p);
  Var num = tape.Add(tape.Exp(tape.MulScalar(logs_q, 2.0)), tape.Mul(diff, diff));
  Var ratio = tape.Mul(num, tape.Exp(tape.MulScalar(logs_p, -2.0)));
  Var elem = tape.Add(tape.Sub(logs_p, logs_q),
                      tape.AddScalar(tape.MulScalar(ratio, 0.5), -0.5));
  return tape.MulScalar(tape.SumAll(elem), 1.0 / ty);
}

Array ExpandByDurations(const Array& rows, const std::vector<int>& durations) {
  VTS_CHECK_ARG(rows.ndim() == 2, "expected a matrix");
  VTS_CHECK_ARG(static_cast<int>(durations.size()) == rows.dim(0),
                "one duration per row required");
  int total = 0;
  for (int d : durations) {
    VTS_CHECK_ARG(d >= 1, "durations must be positive");
    total += d;
  }
  Array out({total, rows.dim(1)});
  int r = 0;
  for (int i = 0; i < rows.dim(0); ++i) {
    for (int k = 0; k < durations[i]; ++k, ++r) {
      for (int c = 0; c < rows.dim(1); ++c) out.at(r, c) = rows.at(i, c);
    }
  }
  return out;
}

Var LogMelOnTape(Tape& tape, Var wave, const TtsConfig& config) {
  Var power = tape.StftPower(wave, config.n_fft, config.hop);
  Array fb = MelFilterbank(config.n_mels, config.n_fft, config.sample_rate);
  // [frames x bins] * [bins x n_mels]
  Var mel = tape.MatMul(power, tape.Constant(Transposed2d(fb)));
  return tape.Log(tape.AddScalar(mel, kMelEnergyFloor));
}

// ---------------------------------------------------------------------------
// Model construction.

TtsModel::TtsModel(const TtsConfig& config) : config_(config) {
  ValidateTtsConfig(config_);
  Rng rng(SplitSeed(config_.seed, "tts/init"));
  const int w = config_.prior_width;
  const int dz = config_.d_z;
  const int half = dz / 2;
  const int sd = config_.speaker_dim;

  speaker_table_ = Embedding::Create(
      &store_, "speaker.table", static_cast<int>(config_.speakers.size()), sd, &rng);
  token_embed_ =
      Embedding::Create(&store_, "prior.embed", config_.alphabet.size(), w, &rng);
  prior_spk_proj_ = Linear::Create(&store_, "prior.spk", sd, w, &rng);
  for (int i = 0; i < config_.prior_layers; ++i) {
    prior_blocks_.push_back(TransformerBlock::Create(
        &store_, "prior.block" + std::to_string(i), w, config_.prior_heads,
        config_.prior_ffn, &rng));
  }
  prior_ln_ = LayerNorm::Create(&store_, "prior.ln", w);
  prior_head_ = Linear::Create(&store_, "prior.head", w, 2 * dz, &rng);

  const int pc = config_.posterior_channels;
  post_pre_ = Conv1dLayer::Create(&store_, "posterior.pre", config_.n_mels, pc,
                                  5, 1, &rng);
  post_spk_proj_ = Linear::Create(&store_, "posterior.spk", sd, pc, &rng);
  post_conv2_ = Conv1dLayer::Create(&store_, "posterior.conv2", pc, pc, 3, 2, &rng);
  post_conv3_ = Conv1dLayer::Create(&store_, "posterior.conv3", pc, pc, 3, 4, &rng);
  post_head_ = Linear::Create(&store_, "posterior.head", pc, 2 * dz, &rng);

  for (int i = 0; i < config_.flow_layers; ++i) {
    const std::string base = "flow.k" + std::to_string(i);
    Coupling c;
    c.in = Linear::Create(&store_, base + ".in", half + sd, config_.flow_hidden, &rng);
    // Zero output head makes every coupling the identity at initialization.
    c.out = Linear::CreateZero(&store_, base + ".out", config_.flow_hidden, dz);
    flow_.push_back(c);
  }

  for (int j = 0; j < 2; ++j) {
    const std::string base = "sdp.c" + std::to_string(j);
    sdp_[j].in = Linear::Create(&store_, base + ".in", w + sd, config_.sdp_hidden, &rng);
    sdp_[j].m = Linear::Create(&store_, base + ".m", config_.sdp_hidden, 1, &rng);
    sdp_[j].s = Linear::CreateZero(&store_, base + ".s", config_.sdp_hidden, 1);
  }

  const auto& dc = config_.decoder_channels;
  dec_pre_ = Conv1dLayer::Create(&store_, "decoder.pre", dz, dc[0], 7, 1, &rng);
  dec_spk_proj_ = Linear::Create(&store_, "decoder.spk", sd, dc[0], &rng);
  for (size_t i = 0; i < config_.decoder_strides.size(); ++i) {
    const int s = config_.decoder_strides[i];
    dec_up_.push_back(ConvT1dLayer::Create(&store_,
                                           "decoder.up" + std::to_string(i),
                                           dc[i], dc[i + 1], 2 * s, s, &rng));
  }
  dec_post_ = Conv1dLayer::Create(&store_, "decoder.post", dc.back(), 1, 7, 1, &rng);
}

int TtsModel::SpeakerIndex(const std::string& speaker_id) const {
  for (size_t i = 0; i < config_.speakers.size(); ++i) {
    if (config_.speakers[i] == speaker_id) return static_cast<int>(i);
  }
  throw ArgumentError("unknown speaker: " + speaker_id);
}

Var TtsModel::SpeakerEmbed(Tape& tape, int speaker_index) const {
  VTS_CHECK_ARG(speaker_index >= 0 &&
                    speaker_index < static_cast<int>(config_.speakers.size()),
                "speaker index out of range");
  return speaker_table_.Forward(tape, {speaker_index});
}

// ---------------------------------------------------------------------------
// Prior and posterior encoders.

TtsModel::PriorVars TtsModel::PriorEncode(Tape& tape,
                                          const std::vector<int>& token_ids,
                                          Var speaker) const {
  VTS_CHECK_ARG(!token_ids.empty(), "empty token sequence");
  for (int id : token_ids) {
    VTS_CHECK_ARG(id >= 0 && id < config_.alphabet.size(),
                  "token id outside alphabet");
  }
  const int tx = static_cast<int>(token_ids.size());
  Var x = token_embed_.Forward(tape, token_ids);
  Var spk_row = prior_spk_proj_.Forward(tape, speaker);
  x = tape.AddRowBroadcast(x, spk_row);
  x = tape.Add(x, tape.Constant(SinusoidalPositions(tx, config_.prior_width)));
  for (const auto& block : prior_blocks_) x = block.Forward(tape, x);
  Var h = prior_ln_.Forward(tape, x);
  Var stats = prior_head_.Forward(tape, h);
  PriorVars out;
  out.mu = tape.SliceCols(stats, 0, config_.d_z);
  out.log_std =
      tape.Clamp(tape.SliceCols(stats, config_.d_z, 2 * config_.d_z), kLogStdLo,
                 kLogStdHi);
  out.hiddens = h;
  return out;
}

PriorOutput TtsModel::PriorEncodeValues(const std::vector<int>& token_ids,
                                        int speaker_index) const {
  Tape tape;
  Var spk = SpeakerEmbed(tape, speaker_index);
  PriorVars v = PriorEncode(tape, token_ids, spk);
  PriorOutput out;
  out.params.mu = tape.value(v.mu);
  out.params.log_std = tape.value(v.log_std);
  out.hiddens = tape.value(v.hiddens);
  return out;
}

TtsModel::PosteriorVars TtsModel::PosteriorEncode(Tape& tape, Var mel,
                                                  Var speaker) const {
  const Array& m = tape.value(mel);
  VTS_CHECK_ARG(m.ndim() == 2 && m.dim(1) == config_.n_mels,
                "posterior expects [frames x n_mels]");
  Var h = tape.Relu(post_pre_.Forward(tape, tape.Transpose(mel)));
  // Per-channel speaker bias; conv tensors are channel-major so we hop
  // through the row-major layout for the broadcast.
  Var ht = tape.AddRowBroadcast(tape.Transpose(h),
                                post_spk_proj_.Forward(tape, speaker));
  h = tape.Transpose(ht);
  h = tape.Add(h, tape.Relu(post_conv2_.Forward(tape, h)));
  h = tape.Add(h, tape.Relu(post_conv3_.Forward(tape, h)));
  Var stats = post_head_.Forward(tape, tape.Transpose(h));
  PosteriorVars out;
  out.mu = tape.SliceCols(stats, 0, config_.d_z);
  out.log_std =
      tape.Clamp(tape.SliceCols(stats, config_.d_z, 2 * config_.d_z), kLogStdLo,
                 kLogStdHi);
  return out;
}

// ---------------------------------------------------------------------------
// Coupling flow.

Var TtsModel::CouplingForward(Tape& tape, Var x, Var speaker, int layer,
                              Var* log_det_accum) const {
  const int dz = config_.d_z;
  const int half = dz / 2;
  const int t_len = tape.value(x).dim(0);
  Var xa = tape.SliceCols(x, 0, half);
  Var xb = tape.SliceCols(x, half, dz);
  const bool even = (layer % 2 == 0);
  Var fixed = even ? xa : xb;
  Var moved = even ? xb : xa;

  Var cond = tape.ConcatCols(fixed, tape.TileRows(speaker, t_len));
  Var mid = tape.Relu(flow_[layer].in.Forward(tape, cond));
  Var raw = flow_[layer].out.Forward(tape, mid);
  Var log_s = tape.MulScalar(tape.Tanh(tape.SliceCols(raw, 0, half)),
                             kFlowScaleBound);
  Var shift = tape.SliceCols(raw, half, dz);
  Var y_moved = tape.Add(tape.Mul(moved, tape.Exp(log_s)), shift);
  if (log_det_accum) {
    *log_det_accum = tape.Add(*log_det_accum, tape.SumAll(log_s));
  }
  return even ? tape.ConcatCols(xa, y_moved) : tape.ConcatCols(y_moved, xb);
}

TtsModel::FlowVars TtsModel::FlowForward(Tape& tape, Var z, Var speaker) const {
  VTS_CHECK_ARG(tape.value(z).ndim() == 2 && tape.value(z).dim(1) == config_.d_z,
                "flow expects [frames x d_z]");
  FlowVars out;
  out.log_det = tape.Constant(Array({1}));
  out.out = z;
  for (int i = 0; i < config_.flow_layers; ++i) {
    out.out = CouplingForward(tape, out.out, speaker, i, &out.log_det);
  }
  return out;
}

Array TtsModel::FlowForwardValues(const Array& z, int speaker_index,
                                  double* log_det) const {
  Tape tape;
  Var spk = SpeakerEmbed(tape, speaker_index);
  FlowVars v = FlowForward(tape, tape.Constant(z), spk);
  if (log_det) *log_det = tape.value(v.log_det)[0];
  return tape.value(v.out);
}

Array TtsModel::FlowInverseValues(const Array& u, int speaker_index) const {
  VTS_CHECK_ARG(u.ndim() == 2 && u.dim(1) == config_.d_z,
                "flow expects [frames x d_z]");
  const int dz = config_.d_z;
  const int half = dz / 2;
  const int t_len = u.dim(0);
  Array y = u;
  for (int layer = config_.flow_layers - 1; layer >= 0; --layer) {
    const bool even = (layer % 2 == 0);
    const int f0 = even ? 0 : half;     // fixed half column offset
    const int m0 = even ? half : 0;     // moved half column offset
    // Recompute the coupling nets from the fixed half, then undo the affine.
    Tape tape;
    Array fixed({t_len, half});
    for (int r = 0; r < t_len; ++r)
      for (int c = 0; c < half; ++c) fixed.at(r, c) = y.at(r, f0 + c);
    Var spk = SpeakerEmbed(tape, speaker_index);
    Var cond = tape.ConcatCols(tape.Constant(fixed), tape.TileRows(spk, t_len));
    Var mid = tape.Relu(flow_[layer].in.Forward(tape, cond));
    Var raw = flow_[layer].out.Forward(tape, mid);
    const Array& rv = tape.value(raw);
    for (int r = 0; r < t_len; ++r) {
      for (int c = 0; c < half; ++c) {
        const double log_s = kFlowScaleBound * std::tanh(rv.at(r, c));
        const double shift = rv.at(r, half + c);
        y.at(r, m0 + c) = (y.at(r, m0 + c) - shift) * std::exp(-log_s);
      }
    }
  }
  return y;
}

// ---------------------------------------------------------------------------
// Stochastic duration predictor: two conditional affine couplings over the
// scalar log-duration, standard-normal base.

Var TtsModel::SdpLoss(Tape& tape, Var hiddens, Var speaker,
                      const std::vector<int>& durations) const {
  const Array& h = tape.value(hiddens);
  VTS_CHECK_ARG(h.ndim() == 2 && h.dim(1) == config_.prior_width,
                "sdp expects prior hiddens");
  VTS_CHECK_ARG(static_cast<int>(durations.size()) == h.dim(0),
                "one duration per phoneme position required");
  const int tx = h.dim(0);
  Array targets({tx, 1});
  for (int i = 0; i < tx; ++i) {
    VTS_CHECK_ARG(durations[i] >= 1, "durations must be positive");
    targets.at(i, 0) = std::log(static_cast<double>(durations[i]));
  }
  Var cond = tape.ConcatCols(hiddens, tape.TileRows(speaker, tx));
  Var x = tape.Constant(targets);
  Var scale_sum = tape.Constant(Array({tx, 1}));
  for (int j = 0; j < 2; ++j) {
    Var mid = tape.Relu(sdp_[j].in.Forward(tape, cond));
    Var m = sdp_[j].m.Forward(tape, mid);
    Var s = tape.MulScalar(tape.Tanh(sdp_[j].s.Forward(tape, mid)),
                           kSdpScaleBound);
    x = tape.Mul(tape.Sub(x, m), tape.Exp(tape.Neg(s)));
    scale_sum = tape.Add(scale_sum, s);
  }
  // -log p(x) = u^2/2 + ln(2*pi)/2 + sum of forward scales.
  Var nll = tape.Add(tape.AddScalar(tape.MulScalar(tape.Mul(x, x), 0.5),
                                    0.5 * kLog2Pi),
                     scale_sum);
  return tape.MeanAll(nll);
}

std::vector<int> TtsModel::SdpSample(const Array& hiddens, int speaker_index,
                                     double temperature, Rng* rng) const {
  VTS_CHECK_ARG(temperature >= 0.0, "temperature must be non-negative");
  VTS_CHECK_ARG(hiddens.ndim() == 2 && hiddens.dim(1) == config_.prior_width,
                "sdp expects prior hiddens");
  VTS_CHECK_ARG(temperature == 0.0 || rng != nullptr,
                "sampling with temperature > 0 needs an rng");
  const int tx = hiddens.dim(0);
  Tape tape;
  Var spk = SpeakerEmbed(tape, speaker_index);
  Var cond =
      tape.ConcatCols(tape.Constant(hiddens), tape.TileRows(spk, tx));
  Array m[2], s[2];
  for (int j = 0; j < 2; ++j) {
    Var mid = tape.Relu(sdp_[j].in.Forward(tape, cond));
    m[j] = tape.value(sdp_[j].m.Forward(tape, mid));
    Array raw = tape.value(sdp_[j].s.Forward(tape, mid));
    s[j] = Array({tx, 1});
    for (int i = 0; i < tx; ++i)
      s[j].at(i, 0) = kSdpScaleBound * std::tanh(raw.at(i, 0));
  }
  std::vector<int> out(tx);
  for (int i = 0; i < tx; ++i) {
    const double eps = temperature == 0.0 ? 0.0 : temperature * rng->Normal();
    // Invert coupling 1 then coupling 0 (base -> data).
    const double u1 = m[1].at(i, 0) + eps * std::exp(s[1].at(i, 0));
    const double log_d = m[0].at(i, 0) + u1 * std::exp(s[0].at(i, 0));
    const double d = std::exp(std::min(log_d, kSdpLogDurCap));
    out[i] = std::max(1, static_cast<int>(std::ceil(d)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Waveform decoder.

Var TtsModel::DecodeWaveform(Tape& tape, Var latents, Var speaker) const {
  const Array& z = tape.value(latents);
  VTS_CHECK_ARG(z.ndim() == 2 && z.dim(1) == config_.d_z,
                "decoder expects [frames x d_z]");
  Var h = dec_pre_.Forward(tape, tape.Transpose(latents));
  Var ht = tape.AddRowBroadcast(tape.Transpose(h),
                                dec_spk_proj_.Forward(tape, speaker));
  h = tape.Relu(tape.Transpose(ht));
  for (const auto& up : dec_up_) h = tape.Relu(up.Forward(tape, h));
  return tape.Tanh(dec_post_.Forward(tape, h));
}

Waveform TtsModel::DecodeWaveformValues(const Array& latents,
                                        int speaker_index) const {
  Tape tape;
  Var spk = SpeakerEmbed(tape, speaker_index);
  Var wave = DecodeWaveform(tape, tape.Constant(latents), spk);
  const Array& v = tape.value(wave);
  Waveform out;
  out.sample_rate = config_.sample_rate;
  out.samples.resize(v.dim(1));
  for (int i = 0; i < v.dim(1); ++i) out.samples[i] = v.at(0, i);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence.

void TtsModel::Save(const std::string& path, int step,
                    const std::string& rng_state) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "tts";
  meta["format"] = 1;
  meta["config"] = config_.ToJson();
  meta["config_fingerprint"] = config_.Fingerprint();
  meta["step"] = step;
  meta["rng_state"] = rng_state;
  SaveCheckpoint(path, meta, store_.All());
}

std::unique_ptr<TtsModel> TtsModel::Load(const std::string& path) {
  nlohmann::ordered_json meta = ReadCheckpointMeta(path);
  if (meta.value("kind", "") != "tts") {
    throw IncompatibleError("checkpoint at " + path + " is not a tts model");
  }
  auto model = std::make_unique<TtsModel>(TtsConfig::FromJson(meta.at("config")));
  LoadCheckpointParams(path, model->store_.All());
  return model;
}

// ---------------------------------------------------------------------------
// Training.

namespace {

struct TtsItem {
  std::vector<int> token_ids;
  int speaker = 0;
  Array log_mel;  // [frames x n_mels], matches the differentiable transform
  std::string id;
};

}  // namespace

TtsTrainResult TrainTts(const Manifest& manifest, const Lexicon& lexicon,
                        const TtsConfig& config, const TtsTrainOptions& options) {
  ValidateTtsConfig(config);
  VTS_CHECK_ARG(!options.out_dir.empty(), "out_dir is required");
  auto entries = manifest.SplitEntries("train");
  VTS_CHECK_ARG(!entries.empty(), "manifest has no train entries");

  const int mel_lead = config.n_fft / config.hop - 1;  // frames lost to the window

  std::vector<TtsItem> items;
  items.reserve(entries.size());
  for (const ManifestEntry* e : entries) {
    Utterance utt = LoadUtterance(*e);
    TtsItem item;
    item.id = e->clip_path;
    try {
      item.token_ids = config.alphabet.Encode(
          lexicon.Phonemize(utt.transcript, /*with_boundaries=*/true));
    } catch (const OovError& err) {
      throw OovError("utterance " + item.id + ": " + err.what());
    } catch (const ArgumentError& err) {
      throw OovError("utterance " + item.id + ": " + err.what());
    }
    bool found = false;
    for (size_t i = 0; i < config.speakers.size(); ++i) {
      if (config.speakers[i] == utt.speaker_id) {
        item.speaker = static_cast<int>(i);
        found = true;
      }
    }
    if (!found) {
      throw ArgumentError("utterance " + item.id + ": speaker " +
                          utt.speaker_id + " missing from config speaker list");
    }
    if (utt.waveform.sample_rate != config.sample_rate) {
      throw SchemaError("utterance " + item.id + ": sample rate " +
                        std::to_string(utt.waveform.sample_rate) +
                        " does not match configured " +
                        std::to_string(config.sample_rate));
    }
    const int len = static_cast<int>(utt.waveform.samples.size());
    if (len < config.n_fft) {
      throw SchemaError("utterance " + item.id +
                        ": audio shorter than one analysis window");
    }
    const int frames = 1 + (len - config.n_fft) / config.hop;
    const int tx = static_cast<int>(item.token_ids.size());
    if (frames < tx) {
      throw InfeasibleError("utterance " + item.id + ": " +
                            std::to_string(frames) + " mel frames cannot cover " +
                            std::to_string(tx) + " phoneme positions");
    }
    if (frames <= mel_lead + 1) {
      throw SchemaError("utterance " + item.id + ": audio too short for the "
                        "reconstruction loss");
    }
    // Trim to the frame grid; the decoder emits frames * hop samples.
    const int usable = config.n_fft + (frames - 1) * config.hop;
    Array wave({1, usable});
    for (int i = 0; i < usable; ++i) wave.at(0, i) = utt.waveform.samples[i];
    Tape tape;
    item.log_mel = tape.value(LogMelOnTape(tape, tape.Constant(wave), config));
    items.push_back(std::move(item));
  }

  TtsModel model(config);
  Adam opt(model.params().All(), {});
  Rng order_rng(SplitSeed(config.seed, "tts/order"));
  Rng noise_rng(SplitSeed(config.seed, "tts/noise"));

  const std::string log_path = options.out_dir + "/tts_loss.csv";
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write " + log_path);
  log << "step,recon,kl,dur,total\n";

  TtsTrainResult result;
  result.loss_log_path = log_path;
  result.total_loss.reserve(config.total_steps);

  std::vector<int> order(items.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  size_t cursor = order.size();

  for (int step = 1; step <= config.total_steps; ++step) {
    if (cursor >= order.size()) {
      for (size_t i = order.size(); i > 1; --i) {
        const size_t j = static_cast<size_t>(order_rng.UniformInt(0, i - 1));
        std::swap(order[i - 1], order[j]);
      }
      cursor = 0;
    }
    const TtsItem& item = items[order[cursor++]];
    const int frames = item.log_mel.dim(0);

    Tape tape;
    Var spk = model.SpeakerEmbed(tape, item.speaker);
    TtsModel::PriorVars prior = model.PriorEncode(tape, item.token_ids, spk);
    Var mel = tape.Constant(item.log_mel);
    TtsModel::PosteriorVars post = model.PosteriorEncode(tape, mel, spk);
    TtsModel::FlowVars flowed = model.FlowForward(tape, post.mu, spk);

    // Alignment from current values; the path itself carries no gradient.
    LatentParams prior_vals{tape.value(prior.mu), tape.value(prior.log_std)};
    AlignmentPath path =
        MonotonicAlignmentSearch(MasLogLikelihood(prior_vals, tape.value(flowed.out)));
    std::vector<int> durations = AlignmentToDurations(path);
    int dur_sum = 0;
    for (int d : durations) dur_sum += d;
    if (dur_sum != frames ||
        static_cast<int>(durations.size()) != static_cast<int>(item.token_ids.size())) {
      throw InternalError("alignment does not cover the mel frames");
    }

    std::vector<int> gather(frames);
    for (int j = 0; j < frames; ++j) gather[j] = path.assignment[j] - 1;
    Var mu_p = tape.GatherRows(prior.mu, gather);
    Var logs_p = tape.GatherRows(prior.log_std, gather);
    Var kl = KlTerm(tape, mu_p, logs_p, flowed.out, post.log_std);

    Var dur_loss =
        model.SdpLoss(tape, tape.StopGrad(prior.hiddens), spk, durations);

    Array eps({frames, config.d_z});
    for (int i = 0; i < eps.size(); ++i) eps[i] = noise_rng.Normal();
    Var z = tape.Add(post.mu, tape.Mul(tape.Exp(post.log_std), tape.Constant(eps)));
    Var wave_hat = model.DecodeWaveform(tape, z, spk);
    Var pred_mel = LogMelOnTape(tape, wave_hat, config);
    // The decoded wave is frames*hop samples, so its mel is mel_lead frames
    // shorter than the target; compare the overlap.
    const int overlap = frames - mel_lead;
    Array target({overlap, config.n_mels});
    for (int r = 0; r < overlap; ++r)
      for (int c = 0; c < config.n_mels; ++c) target.at(r, c) = item.log_mel.at(r, c);
    Var recon = tape.MeanAll(tape.Abs(tape.Sub(pred_mel, tape.Constant(target))));

    Var total = tape.Add(
        tape.Add(tape.MulScalar(recon, config.w_recon),
                 tape.MulScalar(kl, config.w_kl)),
        tape.MulScalar(dur_loss, config.w_dur));

    const double recon_v = tape.value(recon)[0];
    const double kl_v = tape.value(kl)[0];
    const double dur_v = tape.value(dur_loss)[0];
    const double total_v = tape.value(total)[0];
    if (!std::isfinite(total_v)) throw InternalError("training loss diverged");

    tape.Backward(total);
    const double gnorm = opt.GradNorm();
    if (!std::isfinite(gnorm)) throw InternalError("gradient norm diverged");
    opt.Step(TtsLrSchedule(step, config));

    char line[160];
    std::snprintf(line, sizeof(line), "%d,%.6f,%.6f,%.6f,%.6f", step, recon_v,
                  kl_v, dur_v, total_v);
    log << line << "\n";
    result.total_loss.push_back(total_v);
    if (!options.quiet && step % 100 == 0) {
      std::fprintf(stderr,
                   "tts step %d/%d recon %.4f kl %.4f dur %.4f total %.4f\n",
                   step, config.total_steps, recon_v, kl_v, dur_v, total_v);
    }
    if (options.checkpoint_interval > 0 && step % options.checkpoint_interval == 0 &&
        step < config.total_steps) {
      model.Save(options.out_dir + "/tts_step" + std::to_string(step) + ".ckpt",
                 step, order_rng.SerializeState());
    }
  }

  result.checkpoint_path = options.out_dir + "/tts.ckpt";
  model.Save(result.checkpoint_path, config.total_steps,
             order_rng.SerializeState());
  log.close();
  return result;
}

}  // namespace vts
