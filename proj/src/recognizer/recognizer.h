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

#ifndef VTSPEECH_RECOGNIZER_RECOGNIZER_H_
#define VTSPEECH_RECOGNIZER_RECOGNIZER_H_

#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "align/beam.h"
#include "align/ctc.h"
#include "common/rng.h"
#include "corpus/clip.h"
#include "corpus/manifest.h"
#include "nn/layers.h"
#include "text/alphabet.h"
#include "text/lexicon.h"
#include "text/ngram.h"

namespace vts {

// Frame-sequence-to-token model: a per-frame front-end (convolutional for
// video, a projection for log-mel input), zero audio branch concatenated in,
// transformer encoder, token projection head trained with CTC. The
// transformer width is the sum of the feature and (ablated) audio dims.
// The "mel" input type exists for intelligibility scoring of synthesized
// audio with a model trained on audio-mel pairs.
struct RecognizerConfig {
  std::string input_type = "video";  // "video" or "mel"
  int input_size = 96;      // clips preprocessed to input_size x input_size
  double input_fps = 25.0;
  int frontend_pool = 4;    // average-pool factor before the conv stack
  std::vector<int> frontend_channels = {8, 16};  // stride-2 conv stages
  int mel_bins = 80;        // mel input only
  int mel_n_fft = 1024;
  int mel_hop = 256;
  int mel_sample_rate = 16000;
  int temporal_stride = 1;
  int layers = 4;
  int width = 144;
  int heads = 4;
  int ffn_dim = 288;
  int audio_feature_dim = 16;  // zeroed branch; video dim = width - this
  TokenAlphabet alphabet;
  double lr_peak = 0.001;
  double warmup_fraction = 0.30;
  int total_steps = 2000;
  uint64_t seed = 1234;

  int video_feature_dim() const { return width - audio_feature_dim; }

  nlohmann::ordered_json ToJson() const;
  static RecognizerConfig FromJson(const nlohmann::ordered_json& j);
  // Stable digest over the serialized config, for checkpoint compatibility.
  uint64_t Fingerprint() const;
};

void ValidateRecognizerConfig(const RecognizerConfig& config);

// Linear warmup to lr_peak at warmup_fraction of total_steps, then linear
// decay to zero at total_steps.
double LrSchedule(int step, const RecognizerConfig& config);

class Recognizer {
 public:
  explicit Recognizer(const RecognizerConfig& config);

  const RecognizerConfig& config() const { return config_; }
  ParamStore& params() { return store_; }
  const ParamStore& params() const { return store_; }

  // [T' x d_v] video features; clip must already match the model
  // resolution. T' = ceil(num_frames / temporal_stride).
  Var EncodeVideo(Tape& tape, const ArticulatoryClip& clip) const;
  // [T x mel_bins] log-mel rows -> [T' x d_v]; mel models only.
  Var EncodeMel(Tape& tape, const Array& mel) const;
  // Prepends the zeroed audio block: [T' x d_v] -> [T' x width].
  Var FuseModalities(Tape& tape, Var video_feats) const;
  // Transformer plus projection head; rows log-sum-exp to 0.
  Var ForwardPosteriors(Tape& tape, Var fused) const;

  // Eval-mode convenience wrappers over the stages above. The returned
  // posterior aliases this model's alphabet.
  FramePosterior Posteriors(const ArticulatoryClip& clip) const;
  FramePosterior PosteriorsOfMel(const Array& mel) const;

  void Save(const std::string& path, int step, const std::string& rng_state) const;
  static std::unique_ptr<Recognizer> Load(const std::string& path);

 private:
  RecognizerConfig config_;
  ParamStore store_;
  Conv2dLayer conv1_, conv2_;
  Linear video_proj_;
  Linear mel_proj_;
  std::vector<TransformerBlock> blocks_;
  LayerNorm final_ln_;
  Linear head_;
  int flat_dim_ = 0;
};

struct RecognizerTrainOptions {
  MaskSpec mask;                 // applied after preprocessing, every clip
  std::string out_dir;           // receives checkpoint and loss log
  int checkpoint_interval = 0;   // extra snapshots every N steps; 0 = final only
  bool quiet = false;            // suppress progress lines on stderr
};

struct RecognizerTrainResult {
  std::string checkpoint_path;
  std::string loss_log_path;
  std::vector<double> loss_per_frame;  // one entry per step
  double final_loss_per_frame = 0.0;
};

// Trains from random initialization on the manifest's train split.
// Transcripts are phonemized through the lexicon; an OOV word or a
// transcript too long for its clip aborts naming the offending utterance.
// Deterministic for a fixed config seed. Loss log is CSV {step, lr, loss}
// with loss in nats per frame.
RecognizerTrainResult TrainRecognizer(const Manifest& manifest,
                                      const Lexicon& lexicon,
                                      const RecognizerConfig& config,
                                      const RecognizerTrainOptions& options);

struct DecodeOptions {
  bool use_beam = false;
  int beam = 16;
  double lm_weight = 0.0;
  const NGramLM* lm = nullptr;  // required when lm_weight != 0
};

// Posterior -> token ids under the configured decoder.
std::vector<int> DecodePosterior(const FramePosterior& post,
                                 const DecodeOptions& options);

// Clip -> words. Preprocesses to the model's resolution (masking, if any,
// is the caller's job), decodes phonemes, then segments them into words by
// the lexicon inverse.
std::string Transcribe(const ArticulatoryClip& clip, const Recognizer& model,
                       const Lexicon& lexicon, const DecodeOptions& options);

// Log-mel rows -> words, for mel-input models.
std::string TranscribeMel(const Array& mel, const Recognizer& model,
                          const Lexicon& lexicon, const DecodeOptions& options);

}  // namespace vts

#endif  // VTSPEECH_RECOGNIZER_RECOGNIZER_H_
