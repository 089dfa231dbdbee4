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

#include "emotts/conditioning.hpp"

#include <cmath>

namespace emotts {

namespace {

Var posterior_row(const EmotionPosterior& posterior, Eigen::Index categories) {
  if (posterior.probs.size() != categories) {
    throw Error("gm_embed: posterior has " + std::to_string(posterior.probs.size()) +
                " entries, table has " + std::to_string(categories) + " rows");
  }
  if (!posterior.valid()) throw Error("gm_embed: invalid posterior");
  return ad::constant(posterior.probs.transpose());
}

}  // namespace

GlobalEmbedding::GlobalEmbedding(nn::ParameterStore& store, int categories, int dim,
                                 std::mt19937_64& rng) {
  std::normal_distribution<double> init(0.0, 0.3);
  Matrix table(categories, dim);
  for (Eigen::Index i = 0; i < table.size(); ++i) table.data()[i] = init(rng);
  table_ = store.add("gm/table", std::move(table));
}

Var GlobalEmbedding::embed(const EmotionPosterior& posterior) const {
  const Var p = posterior_row(posterior, table_.rows());
  // A one-hot posterior selects the row exactly; matmul would also, but
  // gather keeps the training path a plain lookup.
  for (Eigen::Index i = 0; i < posterior.probs.size(); ++i) {
    if (posterior.probs(i) == 1.0) return lookup(static_cast<int>(i));
  }
  return ad::matmul(p, table_);
}

Var GlobalEmbedding::lookup(int category) const {
  const int ids[] = {category};
  return ad::gather_rows(table_, ids);
}

Vector gm_embed(const Matrix& table, const EmotionPosterior& posterior) {
  if (posterior.probs.size() != table.rows()) {
    throw Error("gm_embed: posterior length does not match table rows");
  }
  if (!posterior.valid()) throw Error("gm_embed: invalid posterior");
  Vector out = Vector::Zero(table.cols());
  for (Eigen::Index i = 0; i < table.rows(); ++i) {
    const double p = posterior.probs(i);
    if (p == 1.0) return table.row(i).transpose();
    if (p != 0.0) out += p * table.row(i).transpose();
  }
  return out;
}

UtteranceEncoder::UtteranceEncoder(nn::ParameterStore& store, int mel_bins, int channels,
                                   int dim, int kernel, double dropout, std::mt19937_64& rng)
    : conv1_(store, "um_encoder/conv1", mel_bins, channels, kernel, rng),
      conv2_(store, "um_encoder/conv2", channels, dim, kernel, rng),
      norm_(store, "um_encoder/norm", dim),
      dropout_(dropout) {}

Var UtteranceEncoder::operator()(const Var& mel, bool training, std::mt19937_64& rng) const {
  if (mel.rows() < 1) throw Error("um_encode: empty mel");
  Var x = ad::relu(conv1_(mel));
  x = ad::relu(conv2_(x));
  x = ad::dropout(norm_(x), dropout_, training, rng);
  return ad::mean_rows(x);
}

UtterancePredictor::UtterancePredictor(nn::ParameterStore& store, int input_dim, int channels,
                                       int dim, int kernel, std::mt19937_64& rng)
    : conv_(store, std::string(kUtterancePredictorPrefix) + "conv", input_dim, channels, kernel, rng),
      norm_(store, std::string(kUtterancePredictorPrefix) + "norm", channels),
      fc1_(store, std::string(kUtterancePredictorPrefix) + "fc1", channels, channels, rng),
      fc2_(store, std::string(kUtterancePredictorPrefix) + "fc2", channels, dim, rng) {}

Var UtterancePredictor::operator()(const Var& text_encodings) const {
  if (text_encodings.rows() < 1) throw Error("um_predict: empty input");
  Var x = norm_(ad::relu(conv_(text_encodings)));
  x = ad::mean_rows(x);
  return fc2_(ad::relu(fc1_(x)));
}

LocalProjection::LocalProjection(nn::ParameterStore& store, int dim, std::mt19937_64& rng)
    : proj_(store, "lm_projection", 1, dim, rng) {}

Var LocalProjection::operator()(const Var& strengths) const {
  if (strengths.cols() != 1) throw Error("lm_project: strengths must be a column");
  return proj_(strengths);
}

LocalPredictor::LocalPredictor(nn::ParameterStore& store, int input_dim, int channels,
                               int kernel, double dropout, std::mt19937_64& rng)
    : conv1_(store, std::string(kLocalPredictorPrefix) + "conv1", input_dim, channels, kernel, rng),
      conv2_(store, std::string(kLocalPredictorPrefix) + "conv2", channels, channels, kernel, rng),
      norm_(store, std::string(kLocalPredictorPrefix) + "norm", channels),
      out_(store, std::string(kLocalPredictorPrefix) + "out", channels, 1, rng),
      dropout_(dropout) {}

Var LocalPredictor::operator()(const Var& text_encodings, bool training,
                               std::mt19937_64& rng) const {
  if (text_encodings.rows() < 1) throw Error("lm_predict: empty input");
  Var x = ad::relu(conv1_(text_encodings));
  x = ad::relu(conv2_(x));
  x = ad::dropout(norm_(x), dropout_, training, rng);
  return ad::sigmoid(out_(x));
}

double um_loss(const Vector& h_utt, const Vector& h_utt_pred) {
  if (h_utt.size() != h_utt_pred.size()) throw Error("um_loss: dimension mismatch");
  return (h_utt - h_utt_pred).squaredNorm();
}

double lm_loss(std::span<const double> target, std::span<const double> predicted) {
  if (target.size() != predicted.size()) throw Error("lm_loss: length mismatch");
  double acc = 0;
  for (std::size_t i = 0; i < target.size(); ++i) {
    const double d = target[i] - predicted[i];
    acc += d * d;
  }
  return acc;
}

Matrix strengths_column(std::span<const double> strengths) {
  Matrix col(static_cast<Eigen::Index>(strengths.size()), 1);
  for (std::size_t i = 0; i < strengths.size(); ++i) col(static_cast<Eigen::Index>(i), 0) = strengths[i];
  return col;
}

void check_strength_range(std::span<const double> strengths) {
  for (std::size_t i = 0; i < strengths.size(); ++i) {
    if (!(strengths[i] >= 0.0 && strengths[i] <= 1.0)) {
      throw Error("strength " + std::to_string(strengths[i]) + " at position " +
                  std::to_string(i) + " outside [0, 1]");
    }
  }
}

}  // namespace emotts
