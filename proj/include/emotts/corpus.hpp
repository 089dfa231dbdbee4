// Copyright (c) 2026 The emotts Authors
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

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace emotts {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Manifest problems carry the 1-based line they were found on.
class ManifestError : public Error {
 public:
  ManifestError(std::size_t line, const std::string& what)
      : Error("manifest line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

struct PhonemeSequence {
  std::vector<int> ids;

  std::size_t size() const { return ids.size(); }
  void validate(int vocabulary_size) const;
};

// Inclusive phoneme and frame ranges of one syllable.
struct SyllableSpan {
  int phoneme_start = 0;
  int phoneme_end = 0;
  int frame_start = 0;
  int frame_end = 0;

  int phoneme_count() const { return phoneme_end - phoneme_start + 1; }
  int frame_count() const { return frame_end - frame_start + 1; }
  bool operator==(const SyllableSpan&) const = default;
};

// Generator-side ground truth attached to synthetic utterances.
struct SyntheticTruth {
  std::vector<double> strengths;  // one per syllable
  double f0_offset = 0.0;
  double energy_offset = 0.0;
};

struct Utterance {
  std::string id;
  std::string text;
  PhonemeSequence phonemes;
  std::vector<SyllableSpan> syllables;
  Matrix mel;  // frames x mel_bins, log-mel domain
  int emotion = 0;
  std::optional<SyntheticTruth> truth;

  int frame_count() const { return static_cast<int>(mel.rows()); }
  int mel_bins() const { return static_cast<int>(mel.cols()); }
};

// Checks that spans are ordered, non-overlapping and partition both the
// phoneme range [0, phoneme_count) and the frame range [0, frame_count).
// Pass frame_count < 0 to skip the frame check.
void validate_spans(std::span<const SyllableSpan> spans, int phoneme_count, int frame_count);

// Each phoneme position takes the strength of its enclosing syllable.
std::vector<double> expand_syllable_strengths(std::span<const double> strengths,
                                              std::span<const SyllableSpan> syllables);

// --- binary mel / alignment / phoneme files -------------------------------

inline constexpr std::uint32_t kMelMagic = 0x4C454D45;  // "EMEL"

void write_mel(const std::filesystem::path& path, const Matrix& mel);
Matrix read_mel(const std::filesystem::path& path);
// Rounds every entry through 32-bit float so in-memory and on-disk mels agree.
Matrix quantize_to_float(const Matrix& mel);

void write_alignment(const std::filesystem::path& path, std::span<const SyllableSpan> spans);
std::vector<SyllableSpan> read_alignment(const std::filesystem::path& path);

void write_phonemes(const std::filesystem::path& path, const PhonemeSequence& phonemes);
PhonemeSequence read_phonemes(const std::filesystem::path& path);

// --- manifest --------------------------------------------------------------

struct ManifestEntry {
  std::string id;
  std::string text;
  std::string emotion_label;
  std::filesystem::path phoneme_path;
  std::filesystem::path alignment_path;
  std::filesystem::path mel_path;

  bool operator==(const ManifestEntry&) const = default;
};

struct CorpusManifest {
  std::vector<std::string> category_names;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;  // relative entry paths resolve against this

  int category_index(const std::string& label) const;  // -1 when unknown
  int neutral_index() const;
  std::size_t size() const { return entries.size(); }
  bool operator==(const CorpusManifest&) const = default;
};

inline constexpr const char* kNeutralLabel = "neutral";

// Parses and validates a manifest. Paths are checked for existence but the
// referenced files are only read by load_utterance.
CorpusManifest load_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

Utterance load_utterance(const CorpusManifest& manifest, std::size_t index);
std::vector<Utterance> load_corpus(const CorpusManifest& manifest);

// Writes utterances as <dir>/manifest.tsv plus per-utterance phoneme,
// alignment and mel files; ground truth, when present, goes to truth.tsv.
CorpusManifest save_corpus(const std::filesystem::path& dir, std::span<const Utterance> corpus,
                           std::span<const std::string> category_names);
// Attaches truth.tsv records (if the file exists next to the manifest).
void attach_truth(const std::filesystem::path& dir, std::vector<Utterance>& corpus);

// --- synthetic corpus --------------------------------------------------------

// Generative model, per frame f inside syllable k of utterance u:
//   mel[f][0] = base_f0[e]     + alpha * s_k + f0_offset_u     + noise
//   mel[f][1] = base_energy[e] + alpha * s_k + energy_offset_u + noise
//   mel[f][c] = phoneme_table[p][c - 2]                        + noise   (c >= 2)
// noise ~ U(-noise_amplitude, noise_amplitude). Phoneme p lasts
// base_frames + round(frames_per_strength * s_k) frames. Neutral
// utterances use s_k = 0.
struct GeneratorConfig {
  std::vector<std::string> categories{"neutral",  "happiness", "anger", "sadness",
                                      "surprise", "fear",      "disgust"};
  std::vector<double> base_f0{0.0, 0.3, 0.25, -0.15, 0.35, 0.1, -0.05};
  std::vector<double> base_energy{0.0, 0.2, 0.3, -0.1, 0.15, 0.05, 0.0};
  int vocabulary_size = 40;
  int mel_bins = 20;
  double alpha = 1.0;
  int min_syllables = 4;
  int max_syllables = 20;
  int min_phonemes_per_syllable = 1;
  int max_phonemes_per_syllable = 3;
  int base_frames = 2;
  double frames_per_strength = 2.0;
  double offset_range = 0.1;
  double noise_amplitude = 0.01;
  double phoneme_scale = 0.5;
  // The phoneme acoustics table is shared between corpora generated with
  // different seeds.
  std::uint64_t table_seed = 1234;
  int cue_words_per_text = 2;

  void validate() const;
  int neutral_index() const;
};

// Frames phoneme of a syllable with strength s occupies.
int phoneme_frames(const GeneratorConfig& config, double strength);

// Emotion cue vocabulary used when composing synthetic texts.
std::vector<std::string> cue_words(const GeneratorConfig& config, int category);

std::vector<Utterance> generate_synthetic_corpus(std::uint64_t seed, int n_per_emotion,
                                                 const GeneratorConfig& config);

// Renders a single utterance from explicit content. Exposed so tests can
// build controlled pairs.
Utterance render_synthetic_utterance(const GeneratorConfig& config, std::string id,
                                     std::string text, int emotion,
                                     const std::vector<std::vector<int>>& syllable_phonemes,
                                     std::vector<double> strengths, double f0_offset,
                                     double energy_offset, std::uint64_t noise_seed);

}  // namespace emotts
