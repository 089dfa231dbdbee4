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

#include "emotts/ranker.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>
#include <set>

namespace emotts {

namespace {

// Floyd's algorithm: m distinct values from [0, n), returned sorted.
std::vector<std::uint64_t> sample_without_replacement(std::uint64_t n, std::uint64_t m,
                                                      std::mt19937_64& rng) {
  std::vector<std::uint64_t> out;
  if (m >= n) {
    out.resize(n);
    for (std::uint64_t i = 0; i < n; ++i) out[i] = i;
    return out;
  }
  std::set<std::uint64_t> chosen;
  for (std::uint64_t j = n - m; j < n; ++j) {
    std::uniform_int_distribution<std::uint64_t> dist(0, j);
    const std::uint64_t t = dist(rng);
    if (!chosen.insert(t).second) chosen.insert(j);
  }
  return {chosen.begin(), chosen.end()};
}

std::uint64_t pair_count(std::uint64_t n) { return n < 2 ? 0 : n * (n - 1) / 2; }

// Maps a linear index onto (i, j), i < j, in row-major upper-triangle order.
std::pair<std::size_t, std::size_t> upper_pair(std::uint64_t index, std::size_t n) {
  std::size_t i = 0;
  while (index >= n - 1 - i) {
    index -= n - 1 - i;
    ++i;
  }
  return {i, i + 1 + static_cast<std::size_t>(index)};
}

void check_dims(std::span<const FeatureVector> set, Eigen::Index& dim) {
  for (const auto& f : set) {
    if (dim < 0) dim = f.values.size();
    if (f.values.size() != dim) throw Error("build_pairs: feature dimension mismatch");
  }
}

template <typename T>
void put(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw Error("truncated ranking model");
  return v;
}

}  // namespace

bool RankingModel::operator==(const RankingModel& other) const {
  if (w.size() != other.w.size() || w != other.w || C != other.C || emotion != other.emotion) {
    return false;
  }
  if (normalizer.has_value() != other.normalizer.has_value()) return false;
  return !normalizer || (normalizer->score_min == other.normalizer->score_min &&
                         normalizer->score_max == other.normalizer->score_max);
}

PairSet build_pairs(std::span<const FeatureVector> emotional,
                    std::span<const FeatureVector> neutral, std::size_t max_pairs,
                    std::uint64_t seed) {
  if (emotional.empty() || neutral.empty()) throw Error("build_pairs: empty feature set");
  if (max_pairs < 1) throw Error("build_pairs: max_pairs must be positive");
  Eigen::Index dim = -1;
  check_dims(emotional, dim);
  check_dims(neutral, dim);

  std::mt19937_64 rng(seed);
  PairSet pairs;
  const std::uint64_t n_e = emotional.size(), n_n = neutral.size();
  for (std::uint64_t idx : sample_without_replacement(n_e * n_n, max_pairs, rng)) {
    pairs.ordered.push_back(emotional[idx / n_n].values - neutral[idx % n_n].values);
  }
  const std::uint64_t within_e = pair_count(n_e), within_n = pair_count(n_n);
  for (std::uint64_t idx : sample_without_replacement(within_e + within_n, max_pairs, rng)) {
    if (idx < within_e) {
      const auto [i, j] = upper_pair(idx, emotional.size());
      pairs.similar.push_back(emotional[i].values - emotional[j].values);
    } else {
      const auto [i, j] = upper_pair(idx - within_e, neutral.size());
      pairs.similar.push_back(neutral[i].values - neutral[j].values);
    }
  }
  return pairs;
}

double ranking_objective(const PairSet& pairs, const Vector& w, double C) {
  double hinge = 0, equal = 0;
  for (const auto& d : pairs.ordered) {
    const double slack = std::max(0.0, 1.0 - w.dot(d));
    hinge += slack * slack;
  }
  for (const auto& d : pairs.similar) {
    const double v = w.dot(d);
    equal += v * v;
  }
  return 0.5 * w.squaredNorm() + C * (hinge + equal);
}

RankingModel train_ranker(const PairSet& pairs, double C, double tol, int max_iter,
                          NewtonTrace* trace) {
  if (!(C > 0.0)) throw Error("train_ranker: C must be positive");
  if (pairs.size() == 0) throw Error("train_ranker: no pairs");
  const Eigen::Index dim =
      pairs.ordered.empty() ? pairs.similar.front().size() : pairs.ordered.front().size();

  // The similar-pair part of the Hessian does not depend on w.
  Matrix h_similar = Matrix::Zero(dim, dim);
  for (const auto& d : pairs.similar) h_similar.noalias() += d * d.transpose();

  Vector w = Vector::Zero(dim);
  double objective = ranking_objective(pairs, w, C);
  NewtonTrace local;
  NewtonTrace& tr = trace ? *trace : local;
  tr = NewtonTrace{};
  tr.objective.push_back(objective);

  for (int iter = 0; iter < max_iter; ++iter) {
    Vector grad = w;
    Matrix hessian = Matrix::Identity(dim, dim) + 2.0 * C * h_similar;
    for (const auto& d : pairs.ordered) {
      const double margin = w.dot(d);
      if (margin < 1.0) {
        grad.noalias() += 2.0 * C * (margin - 1.0) * d;
        hessian.noalias() += 2.0 * C * d * d.transpose();
      }
    }
    for (const auto& d : pairs.similar) grad.noalias() += 2.0 * C * w.dot(d) * d;

    const double gnorm = grad.norm();
    tr.gradient_norm.push_back(gnorm);
    if (!std::isfinite(gnorm)) throw Error("train_ranker: non-finite gradient");
    if (gnorm < tol) {
      tr.converged = true;
      break;
    }
    const Vector step = -hessian.ldlt().solve(grad);

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      const Vector candidate = w + t * step;
      const double value = ranking_objective(pairs, candidate, C);
      if (!std::isfinite(value)) throw Error("train_ranker: non-finite objective");
      if (value < objective) {
        w = candidate;
        objective = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      // No decrease representable in floating point: at the minimum.
      tr.converged = true;
      break;
    }
    tr.objective.push_back(objective);
    tr.iterations = iter + 1;
  }
  if (!std::isfinite(objective)) throw Error("train_ranker: non-finite objective");

  RankingModel model;
  model.w = std::move(w);
  model.C = C;
  return model;
}

double score(const RankingModel& model, const Vector& f) {
  if (f.size() != model.w.size()) {
    throw Error("score: feature dimension " + std::to_string(f.size()) +
                " does not match model dimension " + std::to_string(model.w.size()));
  }
  return model.w.dot(f);
}

double score(const RankingModel& model, const FeatureVector& f) { return score(model, f.values); }

RankingModel fit_normalizer(RankingModel model, std::span<const double> training_scores) {
  if (training_scores.empty()) throw Error("fit_normalizer: no training scores");
  const auto [lo, hi] = std::minmax_element(training_scores.begin(), training_scores.end());
  model.normalizer = ScoreNormalizer{*lo, *hi};
  return model;
}

double normalize(const RankingModel& model, double raw_score) {
  if (!model.normalizer) throw Error("normalize: ranking model has no fitted normalizer");
  const auto& n = *model.normalizer;
  if (n.score_max == n.score_min) return 0.5;
  return std::clamp((raw_score - n.score_min) / (n.score_max - n.score_min), 0.0, 1.0);
}

StrengthSequence extract_strength_sequence(const RankingModel& model, const Utterance& utterance) {
  if (!model.normalizer) throw Error("extract strengths: ranking model has no fitted normalizer");
  StrengthSequence out;
  out.per_syllable.reserve(utterance.syllables.size());
  for (const auto& span : utterance.syllables) {
    out.per_syllable.push_back(
        normalize(model, score(model, aggregate_segment_features(utterance.mel, span))));
  }
  out.per_phoneme = expand_syllable_strengths(out.per_syllable, utterance.syllables);
  return out;
}

RankingModel fit_emotion_ranker(std::span<const Utterance> corpus, int emotion, int neutral,
                                const RankerOptions& options, NewtonTrace* trace) {
  if (emotion == neutral) throw Error("fit_emotion_ranker: neutral has no ranker");
  std::vector<FeatureVector> e_feats, n_feats;
  for (const auto& u : corpus) {
    if (u.emotion == emotion) e_feats.push_back(utterance_features(u.mel));
    if (u.emotion == neutral) n_feats.push_back(utterance_features(u.mel));
  }
  if (e_feats.empty()) {
    throw Error("fit_emotion_ranker: no utterances for category " + std::to_string(emotion));
  }
  if (n_feats.empty()) throw Error("fit_emotion_ranker: no neutral utterances");
  const PairSet pairs = build_pairs(e_feats, n_feats, options.max_pairs,
                                    options.seed + static_cast<std::uint64_t>(emotion));
  RankingModel model = train_ranker(pairs, options.C, options.tol, options.max_iter, trace);
  model.emotion = emotion;

  std::vector<double> scores;
  for (const auto& u : corpus) {
    if (u.emotion != emotion) continue;
    for (const auto& span : u.syllables) {
      scores.push_back(score(model, aggregate_segment_features(u.mel, span)));
    }
  }
  return fit_normalizer(std::move(model), scores);
}

void StrengthExtractor::add(RankingModel model) {
  if (model.emotion == neutral_) throw Error("strength extractor: neutral takes no ranker");
  const int e = model.emotion;
  models_.insert_or_assign(e, std::move(model));
}

bool StrengthExtractor::has(int emotion) const {
  return emotion == neutral_ || models_.count(emotion) != 0;
}

const RankingModel& StrengthExtractor::model(int emotion) const {
  auto it = models_.find(emotion);
  if (it == models_.end()) {
    throw Error("strength extractor: no ranker for category " + std::to_string(emotion));
  }
  return it->second;
}

StrengthSequence StrengthExtractor::extract(const Utterance& utterance) const {
  if (utterance.emotion == neutral_) {
    StrengthSequence out;
    out.per_syllable.assign(utterance.syllables.size(), 0.0);
    out.per_phoneme = expand_syllable_strengths(out.per_syllable, utterance.syllables);
    return out;
  }
  return extract_strength_sequence(model(utterance.emotion), utterance);
}

void save_ranking_model(const std::filesystem::path& path, const RankingModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write ranking model " + path.string());
  out.write("ERNK", 4);
  put<std::uint32_t>(out, 1);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(model.w.size()));
  for (Eigen::Index i = 0; i < model.w.size(); ++i) put<double>(out, model.w(i));
  put<double>(out, model.C);
  put<std::int32_t>(out, model.emotion);
  put<std::uint8_t>(out, model.normalizer ? 1 : 0);
  put<double>(out, model.normalizer ? model.normalizer->score_min : 0.0);
  put<double>(out, model.normalizer ? model.normalizer->score_max : 0.0);
  if (!out) throw Error("failed writing ranking model " + path.string());
}

RankingModel load_ranking_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open ranking model " + path.string());
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, "ERNK", 4) != 0) {
    throw Error("bad ranking model magic in " + path.string());
  }
  if (get<std::uint32_t>(in) != 1) throw Error("unsupported ranking model version");
  RankingModel model;
  model.w.resize(get<std::uint32_t>(in));
  for (Eigen::Index i = 0; i < model.w.size(); ++i) model.w(i) = get<double>(in);
  model.C = get<double>(in);
  model.emotion = get<std::int32_t>(in);
  const bool has_norm = get<std::uint8_t>(in) != 0;
  const double lo = get<double>(in), hi = get<double>(in);
  if (has_norm) model.normalizer = ScoreNormalizer{lo, hi};
  return model;
}

void export_ranking_model_text(const std::filesystem::path& path, const RankingModel& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  char buf[64];
  out << "emotion " << model.emotion << '\n';
  std::snprintf(buf, sizeof(buf), "%.17g", model.C);
  out << "C " << buf << '\n';
  out << "dim " << model.w.size() << '\n';
  out << "w";
  for (Eigen::Index i = 0; i < model.w.size(); ++i) {
    std::snprintf(buf, sizeof(buf), " %.17g", model.w(i));
    out << buf;
  }
  out << '\n';
  if (model.normalizer) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g", model.normalizer->score_min,
                  model.normalizer->score_max);
    out << "normalizer " << buf << '\n';
  }
}

}  // namespace emotts
