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

#include "evalkit/evalkit.h"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "align/metrics.h"
#include "common/status.h"
#include "corpus/clip.h"
#include "corpus/mel.h"
#include "evalkit/png.h"
#include "synthesis/synthesis.h"
#include "text/normalize.h"

namespace vts {

namespace {

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

std::string HexFingerprint(uint64_t fp) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fp));
  return buf;
}

}  // namespace

EvalRow ScorePair(const std::string& id, const std::string& ref,
                  const std::string& hyp) {
  EvalRow row;
  row.id = id;
  row.ref = ref;
  row.hyp = hyp;
  const std::string ref_chars = StripWhitespace(ref);
  const std::string hyp_chars = StripWhitespace(hyp);
  VTS_CHECK_ARG(!ref_chars.empty(), "empty reference for " + id);
  row.char_edits = EditDistance(ref_chars, hyp_chars);
  row.char_len = static_cast<int>(ref_chars.size());
  const std::vector<std::string> ref_words = SplitWords(ref);
  const std::vector<std::string> hyp_words = SplitWords(hyp);
  row.word_edits = EditDistance(ref_words, hyp_words);
  row.word_len = static_cast<int>(ref_words.size());
  row.cer = static_cast<double>(row.char_edits) / row.char_len;
  row.wer = static_cast<double>(row.word_edits) / row.word_len;
  return row;
}

EvalReport MakeReport(
    const std::string& kind, std::vector<EvalRow> rows,
    std::vector<std::pair<std::string, uint64_t>> fingerprints,
    std::vector<ReferenceRow> references) {
  VTS_CHECK_ARG(!rows.empty(), "a report needs at least one row");
  EvalReport report;
  report.kind = kind;
  report.rows = std::move(rows);
  report.fingerprints = std::move(fingerprints);
  report.references = std::move(references);
  for (const auto& row : report.rows) {
    report.char_edits += row.char_edits;
    report.char_len += row.char_len;
    report.word_edits += row.word_edits;
    report.word_len += row.word_len;
  }
  report.pooled_cer =
      static_cast<double>(report.char_edits) / report.char_len;
  report.pooled_wer =
      static_cast<double>(report.word_edits) / report.word_len;
  return report;
}

nlohmann::ordered_json EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["kind"] = kind;
  j["utterances"] = rows.size();
  j["pooled"]["cer"] = pooled_cer;
  j["pooled"]["wer"] = pooled_wer;
  j["pooled"]["char_edits"] = char_edits;
  j["pooled"]["char_len"] = char_len;
  j["pooled"]["word_edits"] = word_edits;
  j["pooled"]["word_len"] = word_len;
  j["fingerprints"] = nlohmann::ordered_json::object();
  for (const auto& [role, fp] : fingerprints) {
    j["fingerprints"][role] = HexFingerprint(fp);
  }
  j["references"] = nlohmann::ordered_json::array();
  for (const auto& ref : references) {
    j["references"].push_back({{"label", ref.label},
                               {"cer_percent", ref.cer_percent},
                               {"wer_percent", ref.wer_percent}});
  }
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& row : rows) {
    j["rows"].push_back({{"id", row.id},
                         {"ref", row.ref},
                         {"hyp", row.hyp},
                         {"char_edits", row.char_edits},
                         {"char_len", row.char_len},
                         {"word_edits", row.word_edits},
                         {"word_len", row.word_len},
                         {"cer", row.cer},
                         {"wer", row.wer}});
  }
  return j;
}

void EvalReport::WriteCsv(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write report csv: " + path);
  f << "id,ref,hyp,char_edits,char_len,word_edits,word_len,cer,wer\n";
  char buf[64];
  for (const auto& row : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%d,%.6f,%.6f", row.char_edits,
                  row.char_len, row.word_edits, row.word_len, row.cer,
                  row.wer);
    f << row.id << ',' << row.ref << ',' << row.hyp << ',' << buf << '\n';
  }
  std::snprintf(buf, sizeof(buf), "%lld,%lld,%lld,%lld,%.6f,%.6f", char_edits,
                char_len, word_edits, word_len, pooled_cer, pooled_wer);
  f << "POOLED,,," << buf << '\n';
}

void EvalReport::WriteJson(const std::string& path) const {
  std::ofstream f(path);
  if (!f) throw IoError("cannot write report json: " + path);
  f << ToJson().dump(2) << '\n';
}

std::string EvalReport::Summary() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%s: %zu utterances, pooled CER %.2f%%  WER %.2f%%\n",
                kind.c_str(), rows.size(), 100.0 * pooled_cer,
                100.0 * pooled_wer);
  std::string out = buf;
  for (const auto& ref : references) {
    std::snprintf(buf, sizeof(buf),
                  "  reference %s: CER %.2f%%  WER %.2f%%\n",
                  ref.label.c_str(), ref.cer_percent, ref.wer_percent);
    out += buf;
  }
  return out;
}

std::vector<ReferenceRow> RecognitionReferences() {
  return {{"USC-TIMIT", 10.95, 14.38}};
}

std::vector<ReferenceRow> MaskingReferences() {
  return {{"full", 10.95, 14.38},
          {"masked_lip", 14.38, 19.04},
          {"lip_only", 19.48, 25.50}};
}

std::vector<ReferenceRow> SynthesisReferences() {
  return {{"M4 (LJSpeech voice)", 9.27, 15.18}};
}

EvalReport EvaluateRecognizer(const Manifest& manifest,
                              const Recognizer& model, const Lexicon& lexicon,
                              const RecognizerEvalOptions& options) {
  const auto entries = manifest.SplitEntries(options.split);
  VTS_CHECK_ARG(!entries.empty(),
                "manifest has no '" + options.split + "' entries");
  std::vector<EvalRow> rows;
  rows.reserve(entries.size());
  for (const auto* entry : entries) {
    Utterance utt = LoadUtterance(*entry);
    const ArticulatoryClip ready =
        ApplyMask(PreprocessClip(utt.clip, model.config().input_size,
                                 model.config().input_fps),
                  options.mask);
    const FramePosterior post = model.Posteriors(ready);
    const std::vector<int> ids = DecodePosterior(post, options.decode);
    const std::vector<std::string> phones =
        model.config().alphabet.Decode(ids);
    const std::string hyp = JoinWords(lexicon.SegmentPhonemes(phones));
    rows.push_back(
        ScorePair(entry->clip_path, NormalizeText(utt.transcript), hyp));
  }
  return MakeReport("recognition_eval", std::move(rows),
                    {{"recognizer", model.config().Fingerprint()}},
                    RecognitionReferences());
}

AblationResult AblationRun(const Manifest& manifest, const Lexicon& lexicon,
                           const RecognizerConfig& config,
                           const AblationOptions& options) {
  VTS_CHECK_ARG(!options.modes.empty(), "ablation needs at least one mode");
  VTS_CHECK_ARG(!options.out_dir.empty(), "ablation needs an output directory");

  AblationResult result;
  result.modes = options.modes;
  for (const auto& mode : options.modes) {
    const MaskSpec mask = DefaultLipRegion(
        MaskModeFromString(mode), config.input_size, config.input_size);

    RecognizerTrainOptions train_options;
    train_options.mask = mask;
    train_options.out_dir =
        (std::filesystem::path(options.out_dir) / mode).string();
    train_options.quiet = options.quiet;
    const RecognizerTrainResult trained =
        TrainRecognizer(manifest, lexicon, config, train_options);
    const auto model = Recognizer::Load(trained.checkpoint_path);

    RecognizerEvalOptions eval_options;
    eval_options.split = options.eval_split;
    eval_options.mask = mask;
    eval_options.decode = options.decode;
    EvalReport report = EvaluateRecognizer(manifest, *model, lexicon,
                                           eval_options);
    report.kind = "ablation_eval";
    report.fingerprints = {{"recognizer/" + mode,
                            model->config().Fingerprint()}};
    report.references = MaskingReferences();
    result.reports.push_back(std::move(report));
    result.checkpoints.push_back(trained.checkpoint_path);
  }

  // One mode per row, published numbers alongside for context.
  std::string table =
      "mode         ours CER%  ours WER%   published CER%  published WER%\n";
  const std::vector<ReferenceRow> published = MaskingReferences();
  for (size_t i = 0; i < result.modes.size(); ++i) {
    const ReferenceRow* ref = nullptr;
    for (const auto& row : published) {
      if (row.label == result.modes[i]) ref = &row;
    }
    char buf[128];
    if (ref != nullptr) {
      std::snprintf(buf, sizeof(buf), "%-12s %9.2f %10.2f %16.2f %15.2f\n",
                    result.modes[i].c_str(),
                    100.0 * result.reports[i].pooled_cer,
                    100.0 * result.reports[i].pooled_wer, ref->cer_percent,
                    ref->wer_percent);
    } else {
      std::snprintf(buf, sizeof(buf), "%-12s %9.2f %10.2f\n",
                    result.modes[i].c_str(),
                    100.0 * result.reports[i].pooled_cer,
                    100.0 * result.reports[i].pooled_wer);
    }
    table += buf;
  }
  result.table = std::move(table);
  return result;
}

EvalReport EvaluateSynthesis(const std::vector<std::string>& sentences,
                             const TtsModel& duration_model,
                             const std::string& source_speaker,
                             const TtsModel& target_model,
                             const std::string& target_speaker,
                             const Recognizer& scorer, const Lexicon& lexicon,
                             const SynthesisEvalOptions& options) {
  VTS_CHECK_ARG(!sentences.empty(), "synthesis evaluation needs sentences");
  VTS_CHECK_ARG(scorer.config().input_type == "mel",
                "synthesis scoring needs a mel-input recognizer");
  if (!(duration_model.config().alphabet == target_model.config().alphabet)) {
    throw IncompatibleError(
        "duration and target models use different phoneme alphabets");
  }
  if (target_model.config().sample_rate != scorer.config().mel_sample_rate) {
    throw IncompatibleError(
        "scorer mel sample rate does not match the synthesis model");
  }
  if (!options.out_dir.empty()) {
    std::filesystem::create_directories(options.out_dir);
  }

  Rng noise_rng(SplitSeed(options.seed, "eval/synthesis-noise"));
  Rng scramble_rng(SplitSeed(options.scramble_seed, "eval/scramble"));
  Rng* rng = options.temperature > 0.0 ? &noise_rng : nullptr;

  std::vector<EvalRow> rows;
  rows.reserve(sentences.size());
  for (size_t i = 0; i < sentences.size(); ++i) {
    const std::string& sentence = sentences[i];
    DurationProfile profile =
        ExtractSourceDurations(duration_model, lexicon, sentence,
                               source_speaker, options.temperature, rng);
    std::vector<int> frames = profile.frames;
    if (options.scramble_durations) {
      const double mean =
          static_cast<double>(profile.TotalFrames()) / frames.size();
      const int64_t hi = std::max<int64_t>(2, std::llround(2.0 * mean));
      for (auto& f : frames) {
        f = static_cast<int>(scramble_rng.UniformInt(1, hi));
      }
    }
    const SynthesisResult synth =
        SynthesizeWithDurations(target_model, target_speaker, lexicon,
                                sentence, frames, options.temperature, rng);

    std::vector<double> samples = synth.waveform.samples;
    if (samples.size() < static_cast<size_t>(scorer.config().mel_n_fft)) {
      samples.resize(scorer.config().mel_n_fft, 0.0);
    }
    const Array mel = MelSpectrogram(
        samples, scorer.config().mel_sample_rate, scorer.config().mel_n_fft,
        scorer.config().mel_hop, scorer.config().mel_bins);
    const std::string hyp = TranscribeMel(mel, scorer, lexicon,
                                          options.decode);

    char id[32];
    std::snprintf(id, sizeof(id), "sent%03zu", i);
    rows.push_back(ScorePair(id, NormalizeText(sentence), hyp));
    if (!options.out_dir.empty()) {
      WriteWav(synth.waveform,
               (std::filesystem::path(options.out_dir) /
                (std::string(id) + ".wav"))
                   .string());
    }
  }
  return MakeReport("synthesis_eval", std::move(rows),
                    {{"duration_model", duration_model.config().Fingerprint()},
                     {"target_model", target_model.config().Fingerprint()},
                     {"scorer", scorer.config().Fingerprint()}},
                    SynthesisReferences());
}

Array RenderSpectrogramPixels(const std::vector<Waveform>& waves,
                              const SpectrogramOptions& options) {
  VTS_CHECK_ARG(!waves.empty(), "spectrogram report needs waveforms");
  VTS_CHECK_ARG(options.gap_px >= 0, "gap_px must be non-negative");

  std::vector<Array> mels;
  mels.reserve(waves.size());
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (const auto& wave : waves) {
    std::vector<double> samples = wave.samples;
    if (samples.size() < static_cast<size_t>(options.n_fft)) {
      samples.resize(options.n_fft, 0.0);
    }
    Array mel = MelSpectrogram(samples, wave.sample_rate, options.n_fft,
                               options.hop, options.n_mels);
    for (int64_t i = 0; i < mel.size(); ++i) {
      lo = std::min(lo, mel[i]);
      hi = std::max(hi, mel[i]);
    }
    mels.push_back(std::move(mel));
  }
  const double span = hi > lo ? hi - lo : 1.0;

  int total_width = options.gap_px * (static_cast<int>(mels.size()) - 1);
  for (const auto& mel : mels) total_width += mel.dim(0);
  Array pixels({options.n_mels, total_width});
  pixels.Fill(1.0);  // white separators

  int col0 = 0;
  for (const auto& mel : mels) {
    // Frequency increases upward: pixel row 0 holds the top mel bin.
    for (int t = 0; t < mel.dim(0); ++t) {
      for (int m = 0; m < options.n_mels; ++m) {
        pixels.at(options.n_mels - 1 - m, col0 + t) =
            (mel.at(t, m) - lo) / span;
      }
    }
    col0 += mel.dim(0) + options.gap_px;
  }
  return pixels;
}

void SpectrogramReport(const std::vector<Waveform>& waves,
                       const std::vector<std::string>& labels,
                       const std::string& png_path,
                       const SpectrogramOptions& options) {
  std::vector<std::string> named = labels;
  if (named.empty()) {
    for (size_t i = 0; i < waves.size(); ++i) {
      named.push_back("panel" + std::to_string(i));
    }
  }
  VTS_CHECK_ARG(named.size() == waves.size(),
                "label count does not match waveform count");
  WritePngGray8(png_path, RenderSpectrogramPixels(waves, options), named);
}

}  // namespace vts
