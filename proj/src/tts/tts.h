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

#ifndef VTSPEECH_TTS_TTS_H_
#define VTSPEECH_TTS_TTS_H_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "align/mas.h"
#include "common/rng.h"
#include "corpus/manifest.h"
#include "corpus/wav.h"
#include "nn/layers.h"
#include "text/alphabet.h"
#include "text/lexicon.h"

namespace vts {

// Conditional-VAE text-to-speech model: transformer prior over phoneme
// latents, dilated-convolution posterior over mel frames, invertible
// coupling flow bridging the two latent spaces, a stochastic duration
// predictor, and a transposed-convolution waveform decoder. Multi-speaker
// via a learned embedding table.
struct TtsConfig {
  int sample_rate = 16000;
  int n_fft = 1024;
  int hop = 256;       // product of decoder upsample strides
  int n_mels = 80;
  int d_z = 32;        // latent channels
  int prior_layers = 2;
  int prior_width = 96;
  int prior_heads = 4;
  int prior_ffn = 192;
  int posterior_channels = 64;
  int flow_layers = 4;
  int flow_hidden = 64;
  int sdp_hidden = 32;
  std::vector<int> decoder_channels = {96, 48, 24, 12, 6};
  std::vector<int> decoder_strides = {4, 4, 4, 4};
  int speaker_dim = 16;
  TokenAlphabet alphabet;          // phonemes + word boundary, no blank
  std::vector<std::string> speakers;  // fixed order defines embedding rows
  double lr_peak = 3e-4;
  double warmup_fraction = 0.10;
  int total_steps = 1500;
  double w_recon = 1.0;
  double w_kl = 1.0;
  double w_dur = 1.0;
  uint64_t seed = 1234;

  nlohmann::ordered_json ToJson() const;
  static TtsConfig FromJson(const nlohmann::ordered_json& j);
  uint64_t Fingerprint() const;
};

void ValidateTtsConfig(const TtsConfig& config);

// Log-stddev clamp shared by prior and posterior heads.
inline constexpr double kLogStdLo = -7.0;
inline constexpr double kLogStdHi = 5.0;

// Diagonal-Gaussian latent parameters plus the conditioning hiddens that
// produced them (prior side only).
struct LatentParams {
  Array mu;       // [T x d_z]
  Array log_std;  // [T x d_z]
};

struct PriorOutput {
  LatentParams params;
  Array hiddens;  // [Tx x prior_width]
};

// entry (i, j) = log N(frame j | prior row i) with diagonal covariance.
Array MasLogLikelihood(const LatentParams& prior, const Array& frames);

// Mean per-frame KL( N(mu_u, exp(logs_q)) || N(mu_p, exp(logs_p)) ), all
// [T x d] on-tape tensors; the prior side is already expanded to frames.
Var KlTerm(Tape& tape, Var mu_p, Var logs_p, Var mu_u, Var logs_q);

// rows [Tx x d] -> [sum(durations) x d], row i repeated durations[i] times.
Array ExpandByDurations(const Array& rows, const std::vector<int>& durations);

// Differentiable log-mel of a [1 x L] waveform on the tape: Hann-window
// power spectrum, fixed triangular filterbank, ln(energy + floor). frames =
// 1 + (L - n_fft)/hop.
Var LogMelOnTape(Tape& tape, Var wave, const TtsConfig& config);

class TtsModel {
 public:
  explicit TtsModel(const TtsConfig& config);

  const TtsConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  int SpeakerIndex(const std::string& speaker_id) const;  // throws on unknown

  // [1 x speaker_dim] embedding row.
  Var SpeakerEmbed(Tape& tape, int speaker_index) const;

  // Graph builders (train and eval share them).
  PriorOutput PriorEncodeValues(const std::vector<int>& token_ids,
                                int speaker_index) const;
  // On-tape variant: returns (mu, log_std, hiddens).
  struct PriorVars {
    Var mu, log_std, hiddens;
  };
  PriorVars PriorEncode(Tape& tape, const std::vector<int>& token_ids,
                        Var speaker) const;

  struct PosteriorVars {
    Var mu, log_std;
  };
  PosteriorVars PosteriorEncode(Tape& tape, Var mel, Var speaker) const;

  // Forward flow (posterior -> prior space) with accumulated log-det.
  struct FlowVars {
    Var out;
    Var log_det;  // scalar
  };
  FlowVars FlowForward(Tape& tape, Var z, Var speaker) const;
  // Value-level helpers for inference and tests.
  Array FlowForwardValues(const Array& z, int speaker_index,
                          double* log_det = nullptr) const;
  Array FlowInverseValues(const Array& u, int speaker_index) const;

  // Negative log-density of log-durations under the conditional scalar
  // flow; durations and hiddens are row-aligned. Mean over positions.
  Var SdpLoss(Tape& tape, Var hiddens, Var speaker,
              const std::vector<int>& durations) const;
  // exp -> ceil -> clamp >= 1 integer durations. temperature 0 is the
  // deterministic mode path. Throws on negative temperature.
  std::vector<int> SdpSample(const Array& hiddens, int speaker_index,
                             double temperature, Rng* rng) const;

  // latents [Ty x d_z] -> [1 x Ty*hop] bounded waveform.
  Var DecodeWaveform(Tape& tape, Var latents, Var speaker) const;
  Waveform DecodeWaveformValues(const Array& latents, int speaker_index) const;

  void Save(const std::string& path, int step, const std::string& rng_state) const;
  static std::unique_ptr<TtsModel> Load(const std::string& path);

 private:
  Var CouplingForward(Tape& tape, Var x, Var speaker, int layer,
                      Var* log_det_accum) const;

  TtsConfig config_;
  ParamStore store_;

  Embedding speaker_table_;
  Embedding token_embed_;
  Linear prior_spk_proj_;
  std::vector<TransformerBlock> prior_blocks_;
  LayerNorm prior_ln_;
  Linear prior_head_;  // width -> 2 d_z

  Conv1dLayer post_pre_;
  Linear post_spk_proj_;
  Conv1dLayer post_conv2_, post_conv3_;
  Linear post_head_;  // channels -> 2 d_z

  struct Coupling {
    Linear in;   // (d_z/2 + speaker_dim) -> hidden
    Linear out;  // hidden -> d_z (zero-init: identity at start)
  };
  std::vector<Coupling> flow_;

  struct SdpCoupling {
    Linear in;  // (prior_width + speaker_dim) -> sdp_hidden
    Linear m;   // sdp_hidden -> 1
    Linear s;   // sdp_hidden -> 1 (zero-init)
  };
  SdpCoupling sdp_[2];

  Conv1dLayer dec_pre_;
  Linear dec_spk_proj_;
  std::vector<ConvT1dLayer> dec_up_;
  Conv1dLayer dec_post_;
};

struct TtsTrainOptions {
  std::string out_dir;
  int checkpoint_interval = 0;
  bool quiet = false;
};

struct TtsTrainResult {
  std::string checkpoint_path;
  std::string loss_log_path;
  std::vector<double> total_loss;  // per step
};

// Trains the conditional VAE on the manifest's train split. Alignment is
// recomputed by MAS every step and treated as non-differentiable. Loss log
// is CSV {step, recon, kl, dur, total}. Deterministic for a fixed seed.
TtsTrainResult TrainTts(const Manifest& manifest, const Lexicon& lexicon,
                        const TtsConfig& config, const TtsTrainOptions& options);

}  // namespace vts

#endif  // VTSPEECH_TTS_TTS_H_
