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
#include <fstream>

#include "common/status.h"
#include "corpus/synthetic.h"
#include "synthesis/synthesis.h"
#include "testutil.h"

using namespace vts;
using namespace vts::testutil;

namespace {

TtsConfig TinyTts(uint64_t seed, std::vector<std::string> speakers) {
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
  c.speakers = std::move(speakers);
  c.seed = seed;
  return c;
}

Lexicon TestLexicon() { return BuildSyntheticLexicon(DefaultPhonemeInventory()); }

double L2Diff(const Waveform& a, const Waveform& b) {
  REQUIRE(a.samples.size() == b.samples.size());
  double s = 0.0;
  for (size_t i = 0; i < a.samples.size(); ++i) {
    const double d = a.samples[i] - b.samples[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace

TEST_CASE("duration extraction covers every phoneme position") {
  TtsModel model(TinyTts(11, {"s0", "s1"}));
  Lexicon lex = TestLexicon();

  DurationProfile p =
      ExtractSourceDurations(model, lex, "kaa teh", "s0", 0.0, nullptr);
  REQUIRE(p.phonemes.size() == 5u);  // k aa | t eh
  CHECK(p.phonemes[2] == "|");
  REQUIRE(p.frames.size() == p.phonemes.size());
  for (int f : p.frames) CHECK(f >= 1);
  CHECK(p.TotalFrames() >= 5);

  DurationProfile q =
      ExtractSourceDurations(model, lex, "kaa teh", "s0", 0.0, nullptr);
  CHECK(p.frames == q.frames);

  Rng rng(3);
  CHECK_THROWS_AS(
      ExtractSourceDurations(model, lex, "kaa", "s0", -1.0, &rng),
      ArgumentError);
  CHECK_THROWS_AS(
      ExtractSourceDurations(model, lex, "kaa", "s0", 0.7, nullptr),
      ArgumentError);
  CHECK_THROWS_AS(
      ExtractSourceDurations(model, lex, "kaa", "ghost", 0.0, nullptr),
      ArgumentError);
  CHECK_THROWS_AS(
      ExtractSourceDurations(model, lex, "zork", "s0", 0.0, nullptr), OovError);
  CHECK_THROWS_AS(ExtractSourceDurations(model, lex, "!!!", "s0", 0.0, nullptr),
                  EmptyTranscriptError);
}

TEST_CASE("same speaker synthesis honours the exact length contract") {
  TtsModel model(TinyTts(12, {"s0"}));
  Lexicon lex = TestLexicon();

  SynthesisResult r = SynthesizeSameSpeaker(model, lex, "saa kiy", "s0", 0.0,
                                            nullptr);
  CHECK(r.waveform.sample_rate == 16000);
  CHECK(r.waveform.samples.size() ==
        static_cast<size_t>(r.durations.TotalFrames()) * 256u);
  for (double s : r.waveform.samples) CHECK(std::abs(s) <= 1.0);

  SynthesisResult again = SynthesizeSameSpeaker(model, lex, "saa kiy", "s0",
                                                0.0, nullptr);
  CHECK(again.waveform.samples == r.waveform.samples);
  CHECK(again.durations.frames == r.durations.frames);
}

TEST_CASE("temperature draws are reproducible under a seeded rng") {
  TtsModel model(TinyTts(13, {"s0"}));
  Lexicon lex = TestLexicon();
  Rng rng_a(71), rng_b(71);
  SynthesisResult a =
      SynthesizeSameSpeaker(model, lex, "paa tuw suw", "s0", 0.8, &rng_a);
  SynthesisResult b =
      SynthesizeSameSpeaker(model, lex, "paa tuw suw", "s0", 0.8, &rng_b);
  CHECK(a.durations.frames == b.durations.frames);
  CHECK(a.waveform.samples == b.waveform.samples);
  CHECK(a.waveform.samples.size() ==
        static_cast<size_t>(a.durations.TotalFrames()) * 256u);
}

TEST_CASE("transplant keeps the timing and changes the voice") {
  TtsModel source(TinyTts(21, {"src"}));
  TtsModel target_a(TinyTts(22, {"tgtA", "tgtB"}));
  TtsModel target_b(TinyTts(23, {"tgt2"}));
  Lexicon lex = TestLexicon();
  const std::string text = "kaa siy puw";

  SynthesisResult ra =
      TransplantSynthesize(source, "src", target_a, "tgtA", lex, text, 0.0,
                           nullptr);
  SynthesisResult rb =
      TransplantSynthesize(source, "src", target_b, "tgt2", lex, text, 0.0,
                           nullptr);
  // The profile is a function of the duration model alone.
  CHECK(ra.durations.frames == rb.durations.frames);
  CHECK(ra.durations.phonemes == rb.durations.phonemes);
  CHECK(ra.waveform.samples.size() ==
        static_cast<size_t>(ra.durations.TotalFrames()) * 256u);
  CHECK(rb.waveform.samples.size() == ra.waveform.samples.size());
  CHECK(L2Diff(ra.waveform, rb.waveform) > 0.0);

  // A different speaker of the same target model also changes the audio.
  SynthesisResult rc =
      TransplantSynthesize(source, "src", target_a, "tgtB", lex, text, 0.0,
                           nullptr);
  CHECK(rc.durations.frames == ra.durations.frames);
  CHECK(L2Diff(ra.waveform, rc.waveform) > 0.0);

  // Matching profile from the extraction op alone.
  DurationProfile direct =
      ExtractSourceDurations(source, lex, text, "src", 0.0, nullptr);
  CHECK(direct.frames == ra.durations.frames);
}

TEST_CASE("transplant rejects models with different alphabets") {
  TtsModel source(TinyTts(31, {"src"}));
  TtsConfig other_cfg = TinyTts(32, {"tgt"});
  other_cfg.alphabet = TokenAlphabet::WithWordBoundary({"K", "AA"});
  TtsModel target(other_cfg);
  Lexicon lex = TestLexicon();
  CHECK_THROWS_AS(TransplantSynthesize(source, "src", target, "tgt", lex,
                                       "kaa", 0.0, nullptr),
                  IncompatibleError);
}

TEST_CASE("explicit duration rendering validates its profile") {
  TtsModel model(TinyTts(41, {"s0"}));
  Lexicon lex = TestLexicon();
  std::vector<int> frames = {3, 4, 2, 5, 1};  // k aa | t eh
  SynthesisResult r =
      SynthesizeWithDurations(model, "s0", lex, "kaa teh", frames, 0.0, nullptr);
  CHECK(r.waveform.samples.size() == 15u * 256u);
  CHECK(r.durations.frames == frames);

  CHECK_THROWS_AS(SynthesizeWithDurations(model, "s0", lex, "kaa teh", {3, 4},
                                          0.0, nullptr),
                  ArgumentError);
  CHECK_THROWS_AS(SynthesizeWithDurations(model, "s0", lex, "kaa teh",
                                          {3, 4, 0, 5, 1}, 0.0, nullptr),
                  ArgumentError);
}

TEST_CASE("bundle writer emits wav, transcript and durations") {
  TempDir dir("bundle");
  TtsModel model(TinyTts(51, {"s0"}));
  Lexicon lex = TestLexicon();
  SynthesisResult r =
      SynthesizeSameSpeaker(model, lex, "kaa teh", "s0", 0.0, nullptr);
  WriteSynthesisBundle(dir.path().string(), "kaa teh", r);

  Waveform wav = ReadWav(dir.file("out.wav"));
  CHECK(wav.samples.size() == r.waveform.samples.size());
  CHECK(wav.sample_rate == 16000);

  std::ifstream t(dir.file("transcript.txt"));
  std::string text;
  std::getline(t, text);
  CHECK(text == "kaa teh");

  std::ifstream d(dir.file("durations.csv"));
  std::string line;
  std::getline(d, line);
  CHECK(line == "phoneme,frames");
  int rows = 0;
  while (std::getline(d, line)) {
    if (!line.empty()) ++rows;
    if (rows == 1) {
      CHECK(line == "K," + std::to_string(r.durations.frames[0]));
    }
  }
  CHECK(rows == 5);
}

TEST_CASE("end to end maps an overfit clip to transplanted audio") {
  TempDir dir("e2e");
  SyntheticCorpusSpec corpus_spec;
  corpus_spec.seed = 900;
  corpus_spec.num_speakers = 1;
  corpus_spec.utterances_per_speaker = 4;
  corpus_spec.frame_size = 48;
  corpus_spec.out_dir = dir.file("corpus");
  const SyntheticCorpus corpus = GenerateSyntheticCorpus(corpus_spec);
  Lexicon lexicon = Lexicon::Load(corpus.lexicon_path);

  RecognizerConfig rc;
  rc.input_size = 48;
  rc.frontend_pool = 4;
  rc.frontend_channels = {8, 16};
  rc.layers = 2;
  rc.width = 48;
  rc.heads = 4;
  rc.ffn_dim = 96;
  rc.audio_feature_dim = 8;
  rc.alphabet = TokenAlphabet::WithBlank(DefaultPhonemeInventory());
  rc.total_steps = 300;
  rc.seed = 511;
  RecognizerTrainOptions ropts;
  ropts.out_dir = dir.file("rec");
  std::filesystem::create_directories(ropts.out_dir);
  ropts.quiet = true;
  const RecognizerTrainResult rres =
      TrainRecognizer(corpus.manifest, lexicon, rc, ropts);
  auto recognizer = Recognizer::Load(rres.checkpoint_path);

  const std::string source_speaker = corpus.manifest.Speakers().front();
  TtsModel duration_model(TinyTts(61, {source_speaker}));
  TtsModel target_model(TinyTts(62, {"voice"}));

  const auto* entry = corpus.manifest.SplitEntries("train").front();
  Utterance utt = LoadUtterance(*entry);
  DecodeOptions greedy;
  EndToEndResult r = EndToEndSynthesize(
      utt.clip, *recognizer, greedy, duration_model, source_speaker,
      target_model, "voice", lexicon, 0.0, nullptr);

  CHECK(r.text == utt.transcript);
  CHECK(r.durations.phonemes ==
        lexicon.Phonemize(utt.transcript, /*with_boundaries=*/true));
  CHECK(r.waveform.samples.size() ==
        static_cast<size_t>(r.durations.TotalFrames()) * 256u);

  // Forcing the recognizer to emit only blanks must surface as an explicit
  // empty-transcription error, not as empty audio.
  Parameter* head_bias = recognizer->params().Find("head.b");
  REQUIRE(head_bias != nullptr);
  head_bias->value.at(0, rc.alphabet.blank_index()) += 100.0;
  CHECK_THROWS_AS(
      EndToEndSynthesize(utt.clip, *recognizer, greedy, duration_model,
                         source_speaker, target_model, "voice", lexicon, 0.0,
                         nullptr),
      EmptyTranscriptError);
}
