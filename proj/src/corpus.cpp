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

#include "emotts/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace emotts {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.emplace_back();
  return out;
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

void put_u32(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4)) throw Error("truncated mel header");
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

fs::path resolve(const fs::path& base, const fs::path& p) {
  return p.is_absolute() ? p : base / p;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void PhonemeSequence::validate(int vocabulary_size) const {
  if (ids.empty()) throw Error("phoneme sequence is empty");
  for (int id : ids) {
    if (id < 0 || id >= vocabulary_size) {
      throw Error("phoneme id " + std::to_string(id) + " outside vocabulary of size " +
                  std::to_string(vocabulary_size));
    }
  }
}

void validate_spans(std::span<const SyllableSpan> spans, int phoneme_count, int frame_count) {
  if (spans.empty()) throw Error("no syllable spans");
  int next_phoneme = 0, next_frame = 0;
  for (std::size_t k = 0; k < spans.size(); ++k) {
    const auto& s = spans[k];
    if (s.phoneme_start > s.phoneme_end || s.frame_start > s.frame_end) {
      throw Error("syllable " + std::to_string(k) + " has an inverted range");
    }
    if (s.phoneme_start != next_phoneme) {
      throw Error("syllable " + std::to_string(k) + " does not continue the phoneme partition");
    }
    if (frame_count >= 0 && s.frame_start != next_frame) {
      throw Error("syllable " + std::to_string(k) + " does not continue the frame partition");
    }
    next_phoneme = s.phoneme_end + 1;
    next_frame = s.frame_end + 1;
  }
  if (next_phoneme != phoneme_count) {
    throw Error("syllable spans cover " + std::to_string(next_phoneme) + " of " +
                std::to_string(phoneme_count) + " phonemes");
  }
  if (frame_count >= 0 && next_frame != frame_count) {
    throw Error("syllable spans cover " + std::to_string(next_frame) + " of " +
                std::to_string(frame_count) + " frames");
  }
}

std::vector<double> expand_syllable_strengths(std::span<const double> strengths,
                                              std::span<const SyllableSpan> syllables) {
  if (strengths.size() != syllables.size()) {
    throw Error("strength count " + std::to_string(strengths.size()) +
                " does not match syllable count " + std::to_string(syllables.size()));
  }
  if (syllables.empty()) throw Error("no syllable spans");
  const int t_len = syllables.back().phoneme_end + 1;
  validate_spans(syllables, t_len, -1);
  std::vector<double> out(static_cast<std::size_t>(t_len));
  for (std::size_t k = 0; k < syllables.size(); ++k) {
    for (int p = syllables[k].phoneme_start; p <= syllables[k].phoneme_end; ++p) {
      out[static_cast<std::size_t>(p)] = strengths[k];
    }
  }
  return out;
}

// --- file formats ------------------------------------------------------------

void write_mel(const fs::path& path, const Matrix& mel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write mel file " + path.string());
  put_u32(out, kMelMagic);
  put_u32(out, static_cast<std::uint32_t>(mel.rows()));
  put_u32(out, static_cast<std::uint32_t>(mel.cols()));
  put_u32(out, 4);
  for (Eigen::Index r = 0; r < mel.rows(); ++r) {
    for (Eigen::Index c = 0; c < mel.cols(); ++c) {
      const float f = static_cast<float>(mel(r, c));
      std::uint32_t bits;
      std::memcpy(&bits, &f, 4);
      put_u32(out, bits);
    }
  }
  if (!out) throw Error("failed writing mel file " + path.string());
}

Matrix read_mel(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open mel file " + path.string());
  if (get_u32(in) != kMelMagic) throw Error("bad mel magic in " + path.string());
  const std::uint32_t rows = get_u32(in), cols = get_u32(in), elem = get_u32(in);
  if (elem != 4) throw Error("unsupported mel element size in " + path.string());
  Matrix mel(rows, cols);
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      const std::uint32_t bits = get_u32(in);
      float f;
      std::memcpy(&f, &bits, 4);
      mel(r, c) = f;
    }
  }
  return mel;
}

Matrix quantize_to_float(const Matrix& mel) {
  return mel.cast<float>().cast<double>();
}

void write_alignment(const fs::path& path, std::span<const SyllableSpan> spans) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write alignment file " + path.string());
  for (const auto& s : spans) {
    out << s.phoneme_start << ' ' << s.phoneme_end << ' ' << s.frame_start << ' ' << s.frame_end
        << '\n';
  }
}

std::vector<SyllableSpan> read_alignment(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open alignment file " + path.string());
  std::vector<SyllableSpan> spans;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (split_ws(line).empty()) continue;
    std::istringstream fields(line);
    SyllableSpan s;
    std::string extra;
    if (!(fields >> s.phoneme_start >> s.phoneme_end >> s.frame_start >> s.frame_end) ||
        (fields >> extra)) {
      throw Error(path.string() + ":" + std::to_string(lineno) + ": expected four integers");
    }
    spans.push_back(s);
  }
  return spans;
}

void write_phonemes(const fs::path& path, const PhonemeSequence& phonemes) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write phoneme file " + path.string());
  for (std::size_t i = 0; i < phonemes.ids.size(); ++i) {
    out << (i ? " " : "") << phonemes.ids[i];
  }
  out << '\n';
}

PhonemeSequence read_phonemes(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open phoneme file " + path.string());
  PhonemeSequence seq;
  std::string tok;
  while (in >> tok) {
    try {
      std::size_t used = 0;
      seq.ids.push_back(std::stoi(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw Error(path.string() + ": bad phoneme id '" + tok + "'");
    }
  }
  return seq;
}

// --- manifest ----------------------------------------------------------------

int CorpusManifest::category_index(const std::string& label) const {
  auto it = std::find(category_names.begin(), category_names.end(), label);
  return it == category_names.end() ? -1 : static_cast<int>(it - category_names.begin());
}

int CorpusManifest::neutral_index() const { return category_index(kNeutralLabel); }

CorpusManifest load_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("manifest not found: " + path.string());
  CorpusManifest manifest;
  manifest.base_dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.rfind("#categories:", 0) == 0) {
      if (have_header) throw ManifestError(lineno, "duplicate #categories header");
      manifest.category_names = split_ws(line.substr(std::strlen("#categories:")));
      if (manifest.category_names.size() < 2) {
        throw ManifestError(lineno, "at least two categories are required");
      }
      if (manifest.neutral_index() < 0) {
        throw ManifestError(lineno, "categories must include \"neutral\"");
      }
      have_header = true;
      continue;
    }
    if (line[0] == '#') continue;
    if (!have_header) throw ManifestError(lineno, "record before #categories header");
    const auto fields = split(line, '\t');
    if (fields.size() != 6) {
      throw ManifestError(lineno, "expected 6 tab-separated fields, found " +
                                      std::to_string(fields.size()));
    }
    ManifestEntry e{fields[0], fields[1], fields[2], fields[3], fields[4], fields[5]};
    if (e.id.empty()) throw ManifestError(lineno, "empty utterance id");
    if (manifest.category_index(e.emotion_label) < 0) {
      throw ManifestError(lineno, "unknown emotion label \"" + e.emotion_label + "\"");
    }
    for (const fs::path* p : {&e.phoneme_path, &e.alignment_path, &e.mel_path}) {
      if (!fs::exists(resolve(manifest.base_dir, *p))) {
        throw ManifestError(lineno, "dangling path " + p->string());
      }
    }
    manifest.entries.push_back(std::move(e));
  }
  if (!have_header) throw ManifestError(lineno, "missing #categories header");
  return manifest;
}

void write_manifest(const fs::path& path, const CorpusManifest& manifest) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write manifest " + path.string());
  out << "#categories:";
  for (const auto& c : manifest.category_names) out << '\t' << c;
  out << '\n';
  for (const auto& e : manifest.entries) {
    out << e.id << '\t' << e.text << '\t' << e.emotion_label << '\t' << e.phoneme_path.string()
        << '\t' << e.alignment_path.string() << '\t' << e.mel_path.string() << '\n';
  }
}

Utterance load_utterance(const CorpusManifest& manifest, std::size_t index) {
  const auto& e = manifest.entries.at(index);
  Utterance u;
  u.id = e.id;
  u.text = e.text;
  u.emotion = manifest.category_index(e.emotion_label);
  u.phonemes = read_phonemes(resolve(manifest.base_dir, e.phoneme_path));
  u.syllables = read_alignment(resolve(manifest.base_dir, e.alignment_path));
  u.mel = read_mel(resolve(manifest.base_dir, e.mel_path));
  if (u.phonemes.ids.empty()) throw Error(e.id + ": empty phoneme sequence");
  if (u.mel.rows() == 0) throw Error(e.id + ": empty mel");
  validate_spans(u.syllables, static_cast<int>(u.phonemes.size()), u.frame_count());
  return u;
}

std::vector<Utterance> load_corpus(const CorpusManifest& manifest) {
  std::vector<Utterance> out;
  out.reserve(manifest.size());
  int bins = -1;
  for (std::size_t i = 0; i < manifest.size(); ++i) {
    out.push_back(load_utterance(manifest, i));
    if (bins >= 0 && out.back().mel_bins() != bins) {
      throw Error(out.back().id + ": mel_bins differs from the rest of the corpus");
    }
    bins = out.back().mel_bins();
  }
  return out;
}

CorpusManifest save_corpus(const fs::path& dir, std::span<const Utterance> corpus,
                           std::span<const std::string> category_names) {
  fs::create_directories(dir / "mel");
  fs::create_directories(dir / "align");
  fs::create_directories(dir / "phon");
  CorpusManifest manifest;
  manifest.base_dir = dir;
  manifest.category_names.assign(category_names.begin(), category_names.end());
  std::ofstream truth;
  for (const auto& u : corpus) {
    ManifestEntry e;
    e.id = u.id;
    e.text = u.text;
    e.emotion_label = manifest.category_names.at(static_cast<std::size_t>(u.emotion));
    e.phoneme_path = fs::path("phon") / (u.id + ".txt");
    e.alignment_path = fs::path("align") / (u.id + ".txt");
    e.mel_path = fs::path("mel") / (u.id + ".mel");
    write_phonemes(dir / e.phoneme_path, u.phonemes);
    write_alignment(dir / e.alignment_path, u.syllables);
    write_mel(dir / e.mel_path, u.mel);
    if (u.truth) {
      if (!truth.is_open()) truth.open(dir / "truth.tsv");
      truth << u.id << '\t' << format_double(u.truth->f0_offset) << '\t'
            << format_double(u.truth->energy_offset) << '\t';
      for (std::size_t k = 0; k < u.truth->strengths.size(); ++k) {
        truth << (k ? "," : "") << format_double(u.truth->strengths[k]);
      }
      truth << '\n';
    }
    manifest.entries.push_back(std::move(e));
  }
  write_manifest(dir / "manifest.tsv", manifest);
  return manifest;
}

void attach_truth(const fs::path& dir, std::vector<Utterance>& corpus) {
  std::ifstream in(dir / "truth.tsv");
  if (!in) return;
  std::map<std::string, SyntheticTruth> records;
  std::string line;
  while (std::getline(in, line)) {
    const auto f = split(line, '\t');
    if (f.size() != 4) continue;
    SyntheticTruth t;
    t.f0_offset = std::stod(f[1]);
    t.energy_offset = std::stod(f[2]);
    for (const auto& s : split(f[3], ',')) {
      if (!s.empty()) t.strengths.push_back(std::stod(s));
    }
    records[f[0]] = std::move(t);
  }
  for (auto& u : corpus) {
    auto it = records.find(u.id);
    if (it != records.end()) u.truth = it->second;
  }
}

// --- synthetic generator -----------------------------------------------------

void GeneratorConfig::validate() const {
  const auto m = categories.size();
  if (m < 2) throw Error("generator: at least two categories required");
  if (neutral_index() < 0) throw Error("generator: categories must include neutral");
  if (base_f0.size() != m || base_energy.size() != m) {
    throw Error("generator: base offsets must have one entry per category");
  }
  if (!(alpha > 0.0)) throw Error("generator: strength effect alpha must be positive");
  if (mel_bins < 2) throw Error("generator: mel_bins must be at least 2");
  if (vocabulary_size < 1) throw Error("generator: empty phoneme vocabulary");
  if (min_syllables < 1 || max_syllables < min_syllables) {
    throw Error("generator: bad syllable count range");
  }
  if (min_phonemes_per_syllable < 1 || max_phonemes_per_syllable < min_phonemes_per_syllable) {
    throw Error("generator: bad phonemes-per-syllable range");
  }
  if (base_frames < 1 || frames_per_strength < 0.0) throw Error("generator: bad duration model");
  if (noise_amplitude < 0.0 || offset_range < 0.0) throw Error("generator: negative noise");
}

int GeneratorConfig::neutral_index() const {
  auto it = std::find(categories.begin(), categories.end(), kNeutralLabel);
  return it == categories.end() ? -1 : static_cast<int>(it - categories.begin());
}

int phoneme_frames(const GeneratorConfig& config, double strength) {
  return config.base_frames + static_cast<int>(std::lround(config.frames_per_strength * strength));
}

std::vector<std::string> cue_words(const GeneratorConfig& config, int category) {
  static const std::map<std::string, std::vector<std::string>> kCues{
      {"neutral", {"report", "schedule", "table", "meeting", "notice"}},
      {"happiness", {"joy", "delight", "sunny", "laugh", "cheer"}},
      {"anger", {"furious", "rage", "outrage", "yell", "hate"}},
      {"sadness", {"tears", "lonely", "grief", "sorrow", "loss"}},
      {"surprise", {"wow", "sudden", "unexpected", "astonish", "whoa"}},
      {"fear", {"scared", "dread", "panic", "terror", "afraid"}},
      {"disgust", {"gross", "filthy", "rotten", "nasty", "vile"}},
  };
  const auto& name = config.categories.at(static_cast<std::size_t>(category));
  auto it = kCues.find(name);
  if (it != kCues.end()) return it->second;
  std::vector<std::string> out;
  for (int i = 0; i < 5; ++i) out.push_back(name + "cue" + std::to_string(i));
  return out;
}

namespace {

Matrix phoneme_table(const GeneratorConfig& config) {
  std::mt19937_64 rng(config.table_seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Matrix table(config.vocabulary_size, config.mel_bins - 2);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = config.phoneme_scale * dist(rng);
  return table;
}

std::string syllable_token(const std::vector<int>& phonemes) {
  std::string tok;
  for (int p : phonemes) tok += "p" + std::to_string(p);
  return tok;
}

}  // namespace

Utterance render_synthetic_utterance(const GeneratorConfig& config, std::string id,
                                     std::string text, int emotion,
                                     const std::vector<std::vector<int>>& syllable_phonemes,
                                     std::vector<double> strengths, double f0_offset,
                                     double energy_offset, std::uint64_t noise_seed) {
  config.validate();
  if (strengths.size() != syllable_phonemes.size()) {
    throw Error("generator: one strength per syllable required");
  }
  const Matrix table = phoneme_table(config);
  std::mt19937_64 rng(noise_seed);
  std::uniform_real_distribution<double> noise(-config.noise_amplitude, config.noise_amplitude);
  const auto e = static_cast<std::size_t>(emotion);

  Utterance u;
  u.id = std::move(id);
  u.text = std::move(text);
  u.emotion = emotion;
  std::vector<Eigen::RowVectorXd> frames;
  for (std::size_t k = 0; k < syllable_phonemes.size(); ++k) {
    SyllableSpan span;
    span.phoneme_start = static_cast<int>(u.phonemes.ids.size());
    span.frame_start = static_cast<int>(frames.size());
    const double s = strengths[k];
    const int dur = phoneme_frames(config, s);
    for (int p : syllable_phonemes[k]) {
      if (p < 0 || p >= config.vocabulary_size) throw Error("generator: phoneme out of range");
      u.phonemes.ids.push_back(p);
      for (int f = 0; f < dur; ++f) {
        Eigen::RowVectorXd row(config.mel_bins);
        row(0) = config.base_f0[e] + config.alpha * s + f0_offset;
        row(1) = config.base_energy[e] + config.alpha * s + energy_offset;
        row.tail(config.mel_bins - 2) = table.row(p);
        for (int c = 0; c < config.mel_bins; ++c) row(c) += noise(rng);
        frames.push_back(std::move(row));
      }
    }
    span.phoneme_end = static_cast<int>(u.phonemes.ids.size()) - 1;
    span.frame_end = static_cast<int>(frames.size()) - 1;
    u.syllables.push_back(span);
  }
  u.mel.resize(static_cast<Eigen::Index>(frames.size()), config.mel_bins);
  for (std::size_t f = 0; f < frames.size(); ++f) u.mel.row(static_cast<Eigen::Index>(f)) = frames[f];
  u.mel = quantize_to_float(u.mel);
  u.truth = SyntheticTruth{std::move(strengths), f0_offset, energy_offset};
  return u;
}

std::vector<Utterance> generate_synthetic_corpus(std::uint64_t seed, int n_per_emotion,
                                                 const GeneratorConfig& config) {
  config.validate();
  if (n_per_emotion < 1) throw Error("generator: n_per_emotion must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> n_syl(config.min_syllables, config.max_syllables);
  std::uniform_int_distribution<int> n_ph(config.min_phonemes_per_syllable,
                                          config.max_phonemes_per_syllable);
  std::uniform_int_distribution<int> phone(0, config.vocabulary_size - 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> offset(-config.offset_range, config.offset_range);
  const int neutral = config.neutral_index();

  std::vector<Utterance> corpus;
  for (int e = 0; e < static_cast<int>(config.categories.size()); ++e) {
    const auto cues = cue_words(config, e);
    std::uniform_int_distribution<std::size_t> pick_cue(0, cues.size() - 1);
    for (int i = 0; i < n_per_emotion; ++i) {
      const int k_count = n_syl(rng);
      std::vector<std::vector<int>> syllables(static_cast<std::size_t>(k_count));
      std::vector<double> strengths(static_cast<std::size_t>(k_count), 0.0);
      std::vector<std::string> words;
      for (int k = 0; k < k_count; ++k) {
        const int n = n_ph(rng);
        for (int j = 0; j < n; ++j) syllables[static_cast<std::size_t>(k)].push_back(phone(rng));
        const double s = unit(rng);
        if (e != neutral) strengths[static_cast<std::size_t>(k)] = s;
        words.push_back(syllable_token(syllables[static_cast<std::size_t>(k)]));
      }
      for (int c = 0; c < config.cue_words_per_text; ++c) {
        std::uniform_int_distribution<std::size_t> where(0, words.size());
        const std::string& cue = cues[pick_cue(rng)];
        words.insert(words.begin() + static_cast<std::ptrdiff_t>(where(rng)), cue);
      }
      std::string text;
      for (std::size_t w = 0; w < words.size(); ++w) text += (w ? " " : "") + words[w];
      const double f0_off = offset(rng), en_off = offset(rng);
      const std::uint64_t noise_seed = rng();
      char id[96];
      std::snprintf(id, sizeof(id), "%s_%llu_%04d", config.categories[static_cast<std::size_t>(e)].c_str(),
                    static_cast<unsigned long long>(seed), i);
      corpus.push_back(render_synthetic_utterance(config, id, std::move(text), e, syllables,
                                                  std::move(strengths), f0_off, en_off,
                                                  noise_seed));
    }
  }
  return corpus;
}

}  // namespace emotts
