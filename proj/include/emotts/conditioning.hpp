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

#include <random>
#include <span>
#include <string>
#include <vector>

#include "emotts/classifier.hpp"
#include "emotts/corpus.hpp"
#include "emotts/nn.hpp"

namespace emotts {

using ad::Var;

// Parameter name prefixes of the two text-side predictors. Their losses
// must only ever reach parameters under these prefixes.
inline constexpr const char* kUtterancePredictorPrefix = "um_predictor/";
inline constexpr const char* kLocalPredictorPrefix = "lm_predictor/";

// Three-level conditioning handed to the acoustic model.
struct ConditioningBundle {
  Vector h_global;  // d_g
  Vector h_utt;     // d_u
  Matrix h_local;   // T x d_l
};

// Global level: one trainable row per emotion category.
class GlobalEmbedding {
 public:
  GlobalEmbedding() = default;
  GlobalEmbedding(nn::ParameterStore& store, int categories, int dim, std::mt19937_64& rng);

  // sum_i p_i * row_i as a 1 x d_g row.
  Var embed(const EmotionPosterior& posterior) const;
  // Hard lookup of one row.
  Var lookup(int category) const;
  const Var& table() const { return table_; }

 private:
  Var table_;
};

// Soft embedding against an explicit table. A one-hot posterior returns
// the selected row bit-for-bit.
Vector gm_embed(const Matrix& table, const EmotionPosterior& posterior);

// Utterance variation encoder: conv-ReLU, conv-ReLU, layer norm, dropout,
// mean over time. Any frame count maps to d_u.
class UtteranceEncoder {
 public:
  UtteranceEncoder() = default;
  UtteranceEncoder(nn::ParameterStore& store, int mel_bins, int channels, int dim, int kernel,
                   double dropout, std::mt19937_64& rng);
  Var operator()(const Var& mel, bool training, std::mt19937_64& rng) const;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm norm_;
  double dropout_ = 0.0;
};

// Text-based variation predictor: conv-ReLU, layer norm, mean over time,
// then two fully connected layers.
class UtterancePredictor {
 public:
  UtterancePredictor() = default;
  UtterancePredictor(nn::ParameterStore& store, int input_dim, int channels, int dim, int kernel,
                     std::mt19937_64& rng);
  Var operator()(const Var& text_encodings) const;

 private:
  nn::Conv1d conv_;
  nn::LayerNorm norm_;
  nn::Linear fc1_, fc2_;
};

// Shared affine map from a scalar strength to a d_l row: row(s) = s*a + b.
class LocalProjection {
 public:
  LocalProjection() = default;
  LocalProjection(nn::ParameterStore& store, int dim, std::mt19937_64& rng);
  // strengths: T x 1.
  Var operator()(const Var& strengths) const;

 private:
  nn::Linear proj_;
};

// Same stack as the utterance encoder without the time pooling, plus a
// logistic output unit per position.
class LocalPredictor {
 public:
  LocalPredictor() = default;
  LocalPredictor(nn::ParameterStore& store, int input_dim, int channels, int kernel,
                 double dropout, std::mt19937_64& rng);
  // T x d_enc -> T x 1 in (0, 1).
  Var operator()(const Var& text_encodings, bool training, std::mt19937_64& rng) const;

 private:
  nn::Conv1d conv1_, conv2_;
  nn::LayerNorm norm_;
  nn::Linear out_;
  double dropout_ = 0.0;
};

// ||h_utt - h_utt_pred||^2
double um_loss(const Vector& h_utt, const Vector& h_utt_pred);
// ||S - S_pred||^2
double lm_loss(std::span<const double> target, std::span<const double> predicted);

Matrix strengths_column(std::span<const double> strengths);
void check_strength_range(std::span<const double> strengths);

}  // namespace emotts
