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
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "emotts/corpus.hpp"
#include "emotts/features.hpp"

namespace emotts {

// Difference vectors for relative-attribute training. `ordered` holds
// f_i - f_j with i emotional and j neutral; `similar` holds differences
// between two members of the same set.
struct PairSet {
  std::vector<Vector> ordered;
  std::vector<Vector> similar;

  std::size_t size() const { return ordered.size() + similar.size(); }
};

struct ScoreNormalizer {
  double score_min = 0.0;
  double score_max = 0.0;
};

struct RankingModel {
  Vector w;
  double C = 10.0;
  int emotion = -1;
  std::optional<ScoreNormalizer> normalizer;

  bool operator==(const RankingModel& other) const;
};

struct RankerOptions {
  double C = 10.0;
  double tol = 1e-6;
  int max_iter = 50;
  std::size_t max_pairs = 5000;
  std::uint64_t seed = 0;
};

// Per-iteration record of the Newton solve. objective[0] is J(w = 0).
struct NewtonTrace {
  std::vector<double> objective;
  std::vector<double> gradient_norm;
  int iterations = 0;
  bool converged = false;
};

PairSet build_pairs(std::span<const FeatureVector> emotional,
                    std::span<const FeatureVector> neutral, std::size_t max_pairs,
                    std::uint64_t seed);

// J(w) = 1/2 |w|^2 + C sum_ordered max(0, 1 - w.d)^2 + C sum_similar (w.d)^2
double ranking_objective(const PairSet& pairs, const Vector& w, double C);

// Damped Newton on J with halving line search. The returned model has
// no normalizer.
RankingModel train_ranker(const PairSet& pairs, double C, double tol, int max_iter,
                          NewtonTrace* trace = nullptr);

double score(const RankingModel& model, const FeatureVector& f);
double score(const RankingModel& model, const Vector& f);

RankingModel fit_normalizer(RankingModel model, std::span<const double> training_scores);
// (s - min) / (max - min) clamped to [0, 1]; 0.5 when max == min.
double normalize(const RankingModel& model, double raw_score);

struct StrengthSequence {
  std::vector<double> per_syllable;
  std::vector<double> per_phoneme;
};

StrengthSequence extract_strength_sequence(const RankingModel& model, const Utterance& utterance);

// Utterance-level training for one emotion against neutral, followed by
// normalizer fitting on the syllable-level scores of that emotion.
RankingModel fit_emotion_ranker(std::span<const Utterance> corpus, int emotion, int neutral,
                                const RankerOptions& options, NewtonTrace* trace = nullptr);

// One ranker per emotional category; neutral utterances map to zeros.
class StrengthExtractor {
 public:
  StrengthExtractor() = default;
  explicit StrengthExtractor(int neutral) : neutral_(neutral) {}

  void add(RankingModel model);
  bool has(int emotion) const;
  const RankingModel& model(int emotion) const;
  int neutral() const { return neutral_; }
  const std::map<int, RankingModel>& models() const { return models_; }

  StrengthSequence extract(const Utterance& utterance) const;

 private:
  int neutral_ = 0;
  std::map<int, RankingModel> models_;
};

// Binary layout, little-endian:
//   char[4] "ERNK" | u32 version (1) | u32 D | f64 w[D] | f64 C | i32 emotion |
//   u8 has_normalizer | f64 score_min | f64 score_max
void save_ranking_model(const std::filesystem::path& path, const RankingModel& model);
RankingModel load_ranking_model(const std::filesystem::path& path);
void export_ranking_model_text(const std::filesystem::path& path, const RankingModel& model);

}  // namespace emotts
