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

#include "recognizer/recognizer.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "common/status.h"
#include "corpus/mel.h"
#include "nn/adam.h"
#include "nn/checkpoint.h"

namespace vts {

nlohmann::ordered_json RecognizerConfig::ToJson() const {
  nlohmann::ordered_json j;
  j["input_type"] = input_type;
  j["input_size"] = input_size;
  j["input_fps"] = input_fps;
  j["frontend_pool"] = frontend_pool;
  j["frontend_channels"] = frontend_channels;
  j["mel_bins"] = mel_bins;
  j["mel_n_fft"] = mel_n_fft;
  j["mel_hop"] = mel_hop;
  j["mel_sample_rate"] = mel_sample_rate;
  j["temporal_stride"] = temporal_stride;
  j["layers"] = layers;
  j["width"] = width;
  j["heads"] = heads;
  j["ffn_dim"] = ffn_dim;
  j["audio_feature_dim"] = audio_feature_dim;
  j["alphabet_tokens"] = alphabet.tokens();
  j["alphabet_blank"] = alphabet.blank_index();
  j["lr_peak"] = lr_peak;
  j["warmup_fraction"] = warmup_fraction;
  j["total_steps"] = total_steps;
  j["seed"] = seed;
  return j;
}

RecognizerConfig RecognizerConfig::FromJson(const nlohmann::ordered_json& j) {
  RecognizerConfig c;
  c.input_type = j.at("input_type").get<std::string>();
  c.input_size = j.at("input_size").get<int>();
  c.input_fps = j.at("input_fps").get<double>();
  c.frontend_pool = j.at("frontend_pool").get<int>();
  c.frontend_channels = j.at("frontend_channels").get<std::vector<int>>();
  c.mel_bins = j.at("mel_bins").get<int>();
  c.mel_n_fft = j.at("mel_n_fft").get<int>();
  c.mel_hop = j.at("mel_hop").get<int>();
  c.mel_sample_rate = j.at("mel_sample_rate").get<int>();
  c.temporal_stride = j.at("temporal_stride").get<int>();
  c.layers = j.at("layers").get<int>();
  c.width = j.at("width").get<int>();
  c.heads = j.at("heads").get<int>();
  c.ffn_dim = j.at("ffn_dim").get<int>();
  c.audio_feature_dim = j.at("audio_feature_dim").get<int>();
  c.alphabet = TokenAlphabet(j.at("alphabet_tokens").get<std::vector<std::string>>(),
                             j.at("alphabet_blank").get<int>());
  c.lr_peak = j.at("lr_peak").get<double>();
  c.warmup_fraction = j.at("warmup_fraction").get<double>();
  c.total_steps = j.at("total_steps").get<int>();
  c.seed = j.at("seed").get<uint64_t>();
  return c;
}

uint64_t RecognizerConfig::Fingerprint() const { return HashString(ToJson().dump()); }

void ValidateRecognizerConfig(const RecognizerConfig& config) {
  VTS_CHECK_ARG(config.lr_peak > 0.0, "lr_peak must be positive");
  VTS_CHECK_ARG(config.warmup_fraction > 0.0 && config.warmup_fraction < 1.0,
                "warmup_fraction must lie in (0, 1)");
  VTS_CHECK_ARG(config.total_steps >= 1, "total_steps must be >= 1");
  VTS_CHECK_ARG(config.temporal_stride >= 1, "temporal_stride must be >= 1");
  VTS_CHECK_ARG(config.alphabet.has_blank(), "recognizer alphabet needs a blank");
  VTS_CHECK_ARG(config.audio_feature_dim >= 0, "audio_feature_dim must be >= 0");
  VTS_CHECK_ARG(config.width > config.audio_feature_dim,
                "width must exceed audio_feature_dim");
  VTS_CHECK_ARG(config.width % config.heads == 0,
                "width must be divisible by heads");
  VTS_CHECK_ARG(config.input_type == "video" || config.input_type == "mel",
                "input_type must be video or mel");
  if (config.input_type == "video") {
    VTS_CHECK_ARG(!config.frontend_channels.empty(), "frontend needs conv stages");
    VTS_CHECK_ARG(config.frontend_pool >= 1, "frontend_pool must be >= 1");
    VTS_CHECK_ARG(config.input_size % config.frontend_pool == 0,
                  "frontend_pool must divide input_size");
  } else {
    VTS_CHECK_ARG(config.mel_bins >= 1, "mel_bins must be positive");
    VTS_CHECK_ARG(config.mel_n_fft >= 16 && config.mel_hop >= 1,
                  "bad mel stft geometry");
    VTS_CHECK_ARG(config.mel_sample_rate > 0, "mel_sample_rate must be positive");
  }
}

double LrSchedule(int step, const RecognizerConfig& config) {
  VTS_CHECK_ARG(step >= 0 && step <= config.total_steps,
                "lr schedule step out of range");
  const double peak_at = config.warmup_fraction * config.total_steps;
  if (step <= peak_at) {
    return config.lr_peak * (step / peak_at);
  }
  return config.lr_peak * (config.total_steps - step) /
         (config.total_steps - peak_at);
}

Recognizer::Recognizer(const RecognizerConfig& config) : config_(config) {
  ValidateRecognizerConfig(config_);
  Rng rng(SplitSeed(config_.seed, "recognizer/init"));

  if (config_.input_type == "video") {
    int side = config_.input_size / config_.frontend_pool;
    int ci = 1;
    // Stride-2 stages with 3x3 kernels and unit padding halve the side.
    const auto& chans = config_.frontend_channels;
    conv1_ = Conv2dLayer::Create(&store_, "frontend.conv1", ci, chans[0], 3, 2, 1, &rng);
    side = (side + 1) / 2;
    VTS_CHECK_ARG(chans.size() == 2, "frontend expects two conv stages");
    conv2_ = Conv2dLayer::Create(&store_, "frontend.conv2", chans[0], chans[1], 3, 2, 1, &rng);
    side = (side + 1) / 2;
    flat_dim_ = chans[1] * side * side;

    video_proj_ = Linear::Create(&store_, "frontend.proj", flat_dim_,
                                 config_.video_feature_dim(), &rng);
  } else {
    mel_proj_ = Linear::Create(&store_, "frontend.mel_proj", config_.mel_bins,
                               config_.video_feature_dim(), &rng);
  }
  for (int l = 0; l < config_.layers; ++l) {
    blocks_.push_back(TransformerBlock::Create(
        &store_, "encoder.block" + std::to_string(l), config_.width,
        config_.heads, config_.ffn_dim, &rng));
  }
  final_ln_ = LayerNorm::Create(&store_, "encoder.final_ln", config_.width);
  // The head is the randomly initialized projection replacing any
  // pretraining-era output layer.
  head_ = Linear::Create(&store_, "head", config_.width,
                         config_.alphabet.size(), &rng);
}

Var Recognizer::EncodeVideo(Tape& tape, const ArticulatoryClip& clip) const {
  if (config_.input_type != "video") {
    throw StateError("this model does not take video input");
  }
  if (clip.height() != config_.input_size || clip.width() != config_.input_size) {
    throw ArgumentError("clip resolution " + std::to_string(clip.height()) +
                        "x" + std::to_string(clip.width()) +
                        " does not match model input size " +
                        std::to_string(config_.input_size));
  }
  const int n = clip.num_frames();
  Var x = tape.Reshape(tape.Constant(clip.frames),
                       {n, 1, config_.input_size, config_.input_size});
  if (config_.frontend_pool > 1) {
    x = tape.AvgPool2d(x, config_.frontend_pool);
  }
  x = tape.Relu(conv1_.Forward(tape, x));
  x = tape.Relu(conv2_.Forward(tape, x));
  x = tape.Reshape(x, {n, flat_dim_});
  Var feats = video_proj_.Forward(tape, x);
  if (config_.temporal_stride > 1) {
    std::vector<int> keep;
    for (int i = 0; i < n; i += config_.temporal_stride) keep.push_back(i);
    feats = tape.GatherRows(feats, keep);
  }
  return feats;
}

Var Recognizer::EncodeMel(Tape& tape, const Array& mel) const {
  if (config_.input_type != "mel") {
    throw StateError("this model does not take mel input");
  }
  VTS_CHECK_ARG(mel.ndim() == 2 && mel.dim(1) == config_.mel_bins,
                "mel input must be [frames x mel_bins]");
  // Utterance-level mean/variance normalization; raw log-mel sits far from
  // unit scale (the energy floor alone is around -23).
  Array normed = mel;
  double mean = 0.0;
  for (int64_t i = 0; i < normed.size(); ++i) mean += normed[i];
  mean /= static_cast<double>(normed.size());
  double var = 0.0;
  for (int64_t i = 0; i < normed.size(); ++i) {
    const double d = normed[i] - mean;
    var += d * d;
  }
  const double inv_std =
      1.0 / std::sqrt(var / static_cast<double>(normed.size()) + 1e-8);
  for (int64_t i = 0; i < normed.size(); ++i) {
    normed[i] = (normed[i] - mean) * inv_std;
  }
  Var feats = mel_proj_.Forward(tape, tape.Constant(std::move(normed)));
  if (config_.temporal_stride > 1) {
    std::vector<int> keep;
    for (int i = 0; i < mel.dim(0); i += config_.temporal_stride)
      keep.push_back(i);
    feats = tape.GatherRows(feats, keep);
  }
  return feats;
}

Var Recognizer::FuseModalities(Tape& tape, Var video_feats) const {
  if (config_.audio_feature_dim == 0) return video_feats;
  const int t = tape.value(video_feats).dim(0);
  Array zeros({t, config_.audio_feature_dim});
  return tape.ConcatCols(tape.Constant(zeros), video_feats);
}

Var Recognizer::ForwardPosteriors(Tape& tape, Var fused) const {
  const int t = tape.value(fused).dim(0);
  Var x = tape.Add(fused, tape.Constant(SinusoidalPositions(t, config_.width)));
  for (const auto& block : blocks_) x = block.Forward(tape, x);
  x = final_ln_.Forward(tape, x);
  return tape.LogSoftmaxRows(head_.Forward(tape, x));
}

FramePosterior Recognizer::Posteriors(const ArticulatoryClip& clip) const {
  Tape tape;
  Var post = ForwardPosteriors(tape, FuseModalities(tape, EncodeVideo(tape, clip)));
  FramePosterior out;
  out.log_probs = tape.value(post);
  out.blank = config_.alphabet.blank_index();
  out.alphabet = &config_.alphabet;
  return out;
}

FramePosterior Recognizer::PosteriorsOfMel(const Array& mel) const {
  Tape tape;
  Var post = ForwardPosteriors(tape, FuseModalities(tape, EncodeMel(tape, mel)));
  FramePosterior out;
  out.log_probs = tape.value(post);
  out.blank = config_.alphabet.blank_index();
  out.alphabet = &config_.alphabet;
  return out;
}

void Recognizer::Save(const std::string& path, int step,
                      const std::string& rng_state) const {
  nlohmann::ordered_json meta;
  meta["kind"] = "recognizer";
  meta["format"] = 1;
  meta["config"] = config_.ToJson();
  meta["config_fingerprint"] = config_.Fingerprint();
  meta["step"] = step;
  meta["rng_state"] = rng_state;
  SaveCheckpoint(path, meta, store_.All());
}

std::unique_ptr<Recognizer> Recognizer::Load(const std::string& path) {
  const auto meta = ReadCheckpointMeta(path);
  if (meta.value("kind", "") != std::string("recognizer")) {
    throw IncompatibleError("not a recognizer checkpoint: " + path);
  }
  auto model = std::make_unique<Recognizer>(
      RecognizerConfig::FromJson(meta.at("config")));
  LoadCheckpointParams(path, model->store_.All());
  return model;
}

namespace {

struct TrainItem {
  ArticulatoryClip clip;  // video models
  Array mel;              // mel models
  std::vector<int> labels;
  std::string id;
};

// Runtime check of the ablation contract: the audio block must be bytes of
// zero in every fused batch.
void CheckAudioBlockZero(const Array& fused, int d_a) {
  for (int r = 0; r < fused.dim(0); ++r) {
    for (int c = 0; c < d_a; ++c) {
      if (fused.at(r, c) != 0.0) {
        throw InternalError("audio block leaked nonzero values");
      }
    }
  }
}

}  // namespace

RecognizerTrainResult TrainRecognizer(const Manifest& manifest,
                                      const Lexicon& lexicon,
                                      const RecognizerConfig& config,
                                      const RecognizerTrainOptions& options) {
  ValidateRecognizerConfig(config);
  const auto train_entries = manifest.SplitEntries("train");
  VTS_CHECK_ARG(!train_entries.empty(), "manifest has no train entries");
  VTS_CHECK_ARG(!options.out_dir.empty(), "training needs an output directory");
  std::filesystem::create_directories(options.out_dir);

  std::vector<TrainItem> items;
  items.reserve(train_entries.size());
  for (const auto* entry : train_entries) {
    TrainItem item;
    item.id = entry->clip_path;
    Utterance utt = LoadUtterance(*entry);
    int t_in = 0;
    if (config.input_type == "video") {
      ArticulatoryClip clip =
          PreprocessClip(utt.clip, config.input_size, config.input_fps);
      item.clip = ApplyMask(clip, options.mask);
      t_in = item.clip.num_frames();
    } else {
      if (utt.waveform.sample_rate != config.mel_sample_rate) {
        throw SchemaError("utterance " + item.id + ": sample rate " +
                          std::to_string(utt.waveform.sample_rate) +
                          " does not match the model's " +
                          std::to_string(config.mel_sample_rate));
      }
      item.mel = MelSpectrogram(utt.waveform.samples, config.mel_sample_rate,
                                config.mel_n_fft, config.mel_hop,
                                config.mel_bins);
      t_in = item.mel.dim(0);
    }
    std::vector<std::string> phones;
    try {
      phones = lexicon.Phonemize(utt.transcript, /*with_boundaries=*/false);
    } catch (const OovError& e) {
      throw OovError("utterance " + item.id + ": " + e.what());
    }
    try {
      item.labels = config.alphabet.Encode(phones);
    } catch (const ArgumentError& e) {
      throw OovError("utterance " + item.id + ": " + e.what());
    }
    const int t_out =
        (t_in + config.temporal_stride - 1) / config.temporal_stride;
    if (MinFramesForLabels(item.labels) > t_out) {
      throw InfeasibleError("utterance " + item.id +
                            ": transcript needs more frames than the clip has");
    }
    items.push_back(std::move(item));
  }

  Recognizer model(config);
  Adam optimizer(model.params().All());
  Rng order_rng(SplitSeed(config.seed, "recognizer/order"));

  const std::string log_path =
      (std::filesystem::path(options.out_dir) / "train_log.csv").string();
  std::ofstream log(log_path);
  if (!log) throw IoError("cannot write loss log: " + log_path);
  log << "step,lr,loss\n";

  RecognizerTrainResult result;
  result.loss_log_path = log_path;
  result.loss_per_frame.reserve(config.total_steps);

  std::vector<int> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  size_t cursor = order.size();  // force a shuffle at step 0

  for (int step = 0; step < config.total_steps; ++step) {
    if (cursor >= order.size()) {
      for (size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1],
                  order[static_cast<size_t>(order_rng.UniformInt(0, i - 1))]);
      }
      cursor = 0;
    }
    const TrainItem& item = items[order[cursor++]];

    Tape tape;
    Var features = config.input_type == "video"
                       ? model.EncodeVideo(tape, item.clip)
                       : model.EncodeMel(tape, item.mel);
    Var fused = model.FuseModalities(tape, features);
    CheckAudioBlockZero(tape.value(fused), config.audio_feature_dim);
    Var log_probs = model.ForwardPosteriors(tape, fused);
    Var loss = tape.CtcLoss(log_probs, item.labels,
                            config.alphabet.blank_index());

    const double nll = tape.value(loss)[0];
    if (!std::isfinite(nll)) {
      throw InternalError("training loss diverged at step " +
                          std::to_string(step));
    }
    tape.Backward(loss);
    if (!std::isfinite(optimizer.GradNorm())) {
      throw InternalError("gradient norm diverged at step " +
                          std::to_string(step));
    }
    const double lr = LrSchedule(step, config);
    optimizer.Step(lr);

    const double per_frame = nll / tape.value(log_probs).dim(0);
    result.loss_per_frame.push_back(per_frame);
    log << step << ',' << lr << ',' << per_frame << '\n';
    if (!options.quiet && (step % 100 == 0 || step + 1 == config.total_steps)) {
      std::fprintf(stderr, "[recognizer] step %d/%d lr %.3g loss %.4f\n",
                   step, config.total_steps, lr, per_frame);
    }
    if (options.checkpoint_interval > 0 &&
        (step + 1) % options.checkpoint_interval == 0 &&
        step + 1 < config.total_steps) {
      const std::string snap =
          (std::filesystem::path(options.out_dir) /
           ("recognizer_step" + std::to_string(step + 1) + ".ckpt"))
              .string();
      model.Save(snap, step + 1, order_rng.SerializeState());
    }
  }

  result.checkpoint_path =
      (std::filesystem::path(options.out_dir) / "recognizer.ckpt").string();
  model.Save(result.checkpoint_path, config.total_steps,
             order_rng.SerializeState());
  result.final_loss_per_frame = result.loss_per_frame.back();
  return result;
}

std::vector<int> DecodePosterior(const FramePosterior& post,
                                 const DecodeOptions& options) {
  if (!options.use_beam) return CtcGreedyDecode(post);
  VTS_CHECK_ARG(options.lm_weight == 0.0 || options.lm != nullptr,
                "language-model fusion needs a language model");
  return CtcBeamDecode(post, options.lm, options.beam, options.lm_weight);
}

std::string Transcribe(const ArticulatoryClip& clip, const Recognizer& model,
                       const Lexicon& lexicon, const DecodeOptions& options) {
  const ArticulatoryClip ready = PreprocessClip(
      clip, model.config().input_size, model.config().input_fps);
  const FramePosterior post = model.Posteriors(ready);
  const std::vector<int> ids = DecodePosterior(post, options);
  const std::vector<std::string> phones = model.config().alphabet.Decode(ids);
  const std::vector<std::string> words = lexicon.SegmentPhonemes(phones);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string TranscribeMel(const Array& mel, const Recognizer& model,
                          const Lexicon& lexicon,
                          const DecodeOptions& options) {
  const FramePosterior post = model.PosteriorsOfMel(mel);
  const std::vector<int> ids = DecodePosterior(post, options);
  const std::vector<std::string> phones = model.config().alphabet.Decode(ids);
  const std::vector<std::string> words = lexicon.SegmentPhonemes(phones);
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

}  // namespace vts
