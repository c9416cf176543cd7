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
#include <filesystem>

#include "common/status.h"
#include "corpus/mel.h"
#include "corpus/synthetic.h"
#include "recognizer/recognizer.h"
#include "testutil.h"

using namespace vts;

namespace {

RecognizerConfig SmallConfig() {
  RecognizerConfig config;
  config.input_size = 48;
  config.frontend_pool = 4;
  config.frontend_channels = {8, 16};
  config.layers = 2;
  config.width = 48;
  config.heads = 4;
  config.ffn_dim = 96;
  config.audio_feature_dim = 8;
  config.alphabet = TokenAlphabet::WithBlank(DefaultPhonemeInventory());
  config.total_steps = 300;
  config.seed = 511;
  return config;
}

ArticulatoryClip RandomClip(int n, int size, unsigned seed) {
  ArticulatoryClip clip;
  clip.frames = Array({n, size, size});
  clip.fps = 25.0;
  Rng rng(seed);
  for (int64_t i = 0; i < clip.frames.size(); ++i) {
    clip.frames[i] = rng.Uniform(0.0, 1.0);
  }
  return clip;
}

}  // namespace

TEST_CASE("lr schedule ramps and decays linearly") {
  RecognizerConfig config = SmallConfig();
  config.total_steps = 1000;
  CHECK(LrSchedule(0, config) == doctest::Approx(0.0));
  CHECK(LrSchedule(300, config) == doctest::Approx(0.001));
  CHECK(LrSchedule(150, config) == doctest::Approx(0.0005));
  CHECK(LrSchedule(1000, config) == doctest::Approx(0.0));
  CHECK(LrSchedule(650, config) == doctest::Approx(0.0005));
  CHECK_THROWS_AS(LrSchedule(-1, config), ArgumentError);
  CHECK_THROWS_AS(LrSchedule(1001, config), ArgumentError);
}

TEST_CASE("config json round trip preserves the fingerprint") {
  RecognizerConfig config = SmallConfig();
  RecognizerConfig back = RecognizerConfig::FromJson(config.ToJson());
  CHECK(back.Fingerprint() == config.Fingerprint());
  CHECK(back.alphabet == config.alphabet);
  back.width = 96;
  back.audio_feature_dim = 16;
  CHECK(back.Fingerprint() != config.Fingerprint());
}

TEST_CASE("config validation") {
  RecognizerConfig config = SmallConfig();
  config.warmup_fraction = 1.5;
  CHECK_THROWS_AS(ValidateRecognizerConfig(config), ArgumentError);
  config = SmallConfig();
  config.width = 50;  // not divisible by heads
  CHECK_THROWS_AS(ValidateRecognizerConfig(config), ArgumentError);
  config = SmallConfig();
  config.alphabet = TokenAlphabet::WithWordBoundary({"K"});
  CHECK_THROWS_AS(ValidateRecognizerConfig(config), ArgumentError);
}

TEST_CASE("encode video shapes and determinism") {
  RecognizerConfig config = SmallConfig();
  Recognizer model(config);
  ArticulatoryClip clip = RandomClip(11, 48, 21);

  Tape tape;
  Var feats = model.EncodeVideo(tape, clip);
  CHECK(tape.value(feats).dim(0) == 11);
  CHECK(tape.value(feats).dim(1) == config.video_feature_dim());

  // Identical clips give identical features.
  Tape tape2;
  Var feats2 = model.EncodeVideo(tape2, clip);
  for (int64_t i = 0; i < tape.value(feats).size(); ++i) {
    CHECK(tape.value(feats)[i] == tape2.value(feats2)[i]);
  }

  // All-zero input stays finite.
  ArticulatoryClip zero;
  zero.frames = Array({5, 48, 48});
  zero.fps = 25.0;
  Tape tape3;
  CHECK(tape3.value(model.EncodeVideo(tape3, zero)).AllFinite());

  ArticulatoryClip wrong = RandomClip(4, 32, 22);
  Tape tape4;
  CHECK_THROWS_AS(model.EncodeVideo(tape4, wrong), ArgumentError);
}

TEST_CASE("temporal stride subsamples feature rows") {
  RecognizerConfig config = SmallConfig();
  config.temporal_stride = 2;
  Recognizer model(config);
  ArticulatoryClip clip = RandomClip(11, 48, 23);
  Tape tape;
  CHECK(tape.value(model.EncodeVideo(tape, clip)).dim(0) == 6);  // ceil(11/2)
}

TEST_CASE("fuse modalities zeroes the audio block exactly") {
  RecognizerConfig config = SmallConfig();
  Recognizer model(config);
  Tape tape;
  Array video({3, config.video_feature_dim()});
  for (int64_t i = 0; i < video.size(); ++i) video[i] = 1.0 + i;
  Var fused = model.FuseModalities(tape, tape.Constant(video));
  const Array& f = tape.value(fused);
  REQUIRE(f.dim(1) == config.width);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < config.audio_feature_dim; ++c) {
      CHECK(f.at(r, c) == 0.0);
    }
    for (int c = 0; c < config.video_feature_dim(); ++c) {
      CHECK(f.at(r, config.audio_feature_dim + c) == video.at(r, c));
    }
  }

  RecognizerConfig no_audio = SmallConfig();
  no_audio.audio_feature_dim = 0;
  Recognizer plain(no_audio);
  Tape tape2;
  Array v2({2, no_audio.video_feature_dim()});
  v2.Fill(0.5);
  Var same = plain.FuseModalities(tape2, tape2.Constant(v2));
  CHECK(tape2.value(same).dim(1) == no_audio.width);
}

TEST_CASE("posterior rows are log distributions and seed-reproducible") {
  RecognizerConfig config = SmallConfig();
  Recognizer model(config);
  ArticulatoryClip clip = RandomClip(10, 48, 24);
  FramePosterior post = model.Posteriors(clip);
  REQUIRE(post.num_frames() == 10);
  REQUIRE(post.alphabet_size() == config.alphabet.size());
  for (int t = 0; t < post.num_frames(); ++t) {
    double lse = 0.0;
    for (int k = 0; k < post.alphabet_size(); ++k) {
      lse += std::exp(post.log_probs.at(t, k));
    }
    CHECK(std::abs(std::log(lse)) < 1e-5);
  }

  Recognizer again(config);
  FramePosterior post2 = again.Posteriors(clip);
  for (int64_t i = 0; i < post.log_probs.size(); ++i) {
    CHECK(post.log_probs[i] == post2.log_probs[i]);
  }
}

TEST_CASE("checkpoint round trip reproduces forward outputs") {
  testutil::TempDir dir("recckpt");
  RecognizerConfig config = SmallConfig();
  Recognizer model(config);
  ArticulatoryClip clip = RandomClip(7, 48, 25);
  FramePosterior before = model.Posteriors(clip);

  const std::string path = dir.file("model.ckpt");
  model.Save(path, 42, "rngstate");
  auto loaded = Recognizer::Load(path);
  CHECK(loaded->config().Fingerprint() == config.Fingerprint());
  FramePosterior after = loaded->Posteriors(clip);
  for (int64_t i = 0; i < before.log_probs.size(); ++i) {
    CHECK(std::abs(after.log_probs[i] - before.log_probs[i]) < 1e-6);
  }

  CHECK_THROWS_AS(Recognizer::Load(dir.file("missing.ckpt")), IoError);
}

TEST_CASE("training overfits a tiny corpus and transcribes it back") {
  testutil::TempDir dir("rectrain");
  SyntheticCorpusSpec corpus_spec;
  corpus_spec.seed = 900;
  corpus_spec.num_speakers = 1;
  corpus_spec.utterances_per_speaker = 4;
  corpus_spec.frame_size = 48;
  corpus_spec.out_dir = dir.file("corpus");
  const SyntheticCorpus corpus = GenerateSyntheticCorpus(corpus_spec);
  Lexicon lexicon = Lexicon::Load(corpus.lexicon_path);

  RecognizerConfig config = SmallConfig();
  RecognizerTrainOptions options;
  options.out_dir = dir.file("run");
  options.quiet = true;
  const RecognizerTrainResult result =
      TrainRecognizer(corpus.manifest, lexicon, config, options);

  REQUIRE(result.loss_per_frame.size() == 300);
  CHECK(result.final_loss_per_frame < 0.15);
  CHECK(std::filesystem::exists(result.checkpoint_path));
  CHECK(std::filesystem::exists(result.loss_log_path));

  auto model = Recognizer::Load(result.checkpoint_path);
  DecodeOptions greedy;
  int exact = 0;
  int total = 0;
  for (const auto* entry : corpus.manifest.SplitEntries("train")) {
    Utterance utt = LoadUtterance(*entry);
    const std::string hyp = Transcribe(utt.clip, *model, lexicon, greedy);
    exact += hyp == utt.transcript ? 1 : 0;
    ++total;

    // Greedy and wide zero-weight beam agree on unambiguous clips.
    DecodeOptions beam;
    beam.use_beam = true;
    beam.beam = 32;
    const std::string beam_hyp = Transcribe(utt.clip, *model, lexicon, beam);
    CHECK(beam_hyp == hyp);
  }
  CHECK(exact == total);

  // All-zero clip must not crash or emit NaN-driven output.
  ArticulatoryClip zero;
  zero.frames = Array({12, 48, 48});
  zero.fps = 25.0;
  CHECK_NOTHROW(Transcribe(zero, *model, lexicon, greedy));
}

TEST_CASE("mel input variant trains on audio and transcribes it back") {
  testutil::TempDir dir("melrec");
  SyntheticCorpusSpec corpus_spec;
  corpus_spec.seed = 903;
  corpus_spec.num_speakers = 1;
  corpus_spec.utterances_per_speaker = 4;
  corpus_spec.frame_size = 48;
  corpus_spec.out_dir = dir.file("corpus");
  const SyntheticCorpus corpus = GenerateSyntheticCorpus(corpus_spec);
  Lexicon lexicon = Lexicon::Load(corpus.lexicon_path);

  RecognizerConfig config = SmallConfig();
  config.input_type = "mel";
  config.mel_bins = 40;
  config.mel_n_fft = 512;
  config.mel_hop = 256;
  config.temporal_stride = 2;
  config.total_steps = 400;
  config.seed = 513;
  CHECK(RecognizerConfig::FromJson(config.ToJson()).Fingerprint() ==
        config.Fingerprint());

  RecognizerTrainOptions options;
  options.out_dir = dir.file("run");
  options.quiet = true;
  const RecognizerTrainResult result =
      TrainRecognizer(corpus.manifest, lexicon, config, options);
  CHECK(result.final_loss_per_frame < 0.15);

  auto model = Recognizer::Load(result.checkpoint_path);
  DecodeOptions greedy;
  for (const auto* entry : corpus.manifest.SplitEntries("train")) {
    Utterance utt = LoadUtterance(*entry);
    const Array mel =
        MelSpectrogram(utt.waveform.samples, config.mel_sample_rate,
                       config.mel_n_fft, config.mel_hop, config.mel_bins);
    CHECK(TranscribeMel(mel, *model, lexicon, greedy) == utt.transcript);
  }

  // Input gates: a mel model rejects clips, a video model rejects mel.
  Tape tape;
  CHECK_THROWS_AS(model->EncodeVideo(tape, RandomClip(4, 48, 1)), StateError);
  Recognizer video_model(SmallConfig());
  CHECK_THROWS_AS(video_model.EncodeMel(tape, Array({5, 40})), StateError);

  // Training data must match the configured sample rate.
  RecognizerConfig wrong_rate = config;
  wrong_rate.mel_sample_rate = 8000;
  options.out_dir = dir.file("wrong_rate");
  CHECK_THROWS_AS(TrainRecognizer(corpus.manifest, lexicon, wrong_rate, options),
                  SchemaError);
}

TEST_CASE("training is deterministic for a fixed seed") {
  testutil::TempDir dir("recdet");
  SyntheticCorpusSpec corpus_spec;
  corpus_spec.seed = 901;
  corpus_spec.num_speakers = 1;
  corpus_spec.utterances_per_speaker = 3;
  corpus_spec.frame_size = 48;
  corpus_spec.out_dir = dir.file("corpus");
  const SyntheticCorpus corpus = GenerateSyntheticCorpus(corpus_spec);
  Lexicon lexicon = Lexicon::Load(corpus.lexicon_path);

  RecognizerConfig config = SmallConfig();
  config.total_steps = 40;
  RecognizerTrainOptions options;
  options.quiet = true;
  options.out_dir = dir.file("a");
  const auto first = TrainRecognizer(corpus.manifest, lexicon, config, options);
  options.out_dir = dir.file("b");
  const auto second = TrainRecognizer(corpus.manifest, lexicon, config, options);
  REQUIRE(first.loss_per_frame.size() == second.loss_per_frame.size());
  for (size_t i = 0; i < first.loss_per_frame.size(); ++i) {
    CHECK(first.loss_per_frame[i] == second.loss_per_frame[i]);
  }
}

TEST_CASE("training aborts on oov and infeasible transcripts") {
  testutil::TempDir dir("recabort");
  ArticulatoryClip clip = RandomClip(10, 48, 26);
  SaveClip(clip, dir.file("c.clip"));
  Waveform wav;
  wav.sample_rate = 16000;
  wav.samples.assign(6400, 0.05);  // 0.4 s, matches 10 frames at 25 fps
  WriteWav(wav, dir.file("a.wav"));

  ManifestEntry entry;
  entry.clip_path = dir.file("c.clip");
  entry.audio_path = dir.file("a.wav");
  entry.speaker_id = "s";
  entry.split = "train";

  Lexicon lexicon;
  lexicon.Add("kaa", {"K", "AA"});

  RecognizerConfig config = SmallConfig();
  config.total_steps = 5;
  RecognizerTrainOptions options;
  options.quiet = true;
  options.out_dir = dir.file("run");

  entry.transcript = "kaa zork";
  CHECK_THROWS_WITH_AS(
      TrainRecognizer(Manifest({entry}), lexicon, config, options),
      doctest::Contains("c.clip"), OovError);

  // Six words make 12 labels; 10 frames cannot carry them.
  entry.transcript = "kaa kaa kaa kaa kaa kaa";
  CHECK_THROWS_WITH_AS(
      TrainRecognizer(Manifest({entry}), lexicon, config, options),
      doctest::Contains("c.clip"), InfeasibleError);

  Manifest empty_train(std::vector<ManifestEntry>{});
  CHECK_THROWS_AS(TrainRecognizer(empty_train, lexicon, config, options),
                  ArgumentError);
}
