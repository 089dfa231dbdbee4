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
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "emotts/corpus.hpp"

namespace emotts {

// Probability vector over the M emotion categories.
struct EmotionPosterior {
  Vector probs;

  static EmotionPosterior uniform(int categories);
  static EmotionPosterior one_hot(int categories, int index);
  int argmax() const;
  // Non-negative entries summing to one within tol.
  bool valid(double tol = 1e-6) const;
};

// Anything that maps text to a posterior can drive the soft global embedding.
class PosteriorSource {
 public:
  virtual ~PosteriorSource() = default;
  virtual EmotionPosterior predict_posterior(std::string_view text) const = 0;
  virtual int category_count() const = 0;
};

// Lowercased alphanumeric runs.
std::vector<std::string> tokenize(std::string_view text);

struct ClassifierConfig {
  int epochs = 300;
  double learning_rate = 0.5;
  double l2 = 1e-4;
  int batch_size = 16;
  std::uint64_t seed = 0;
};

// Bag-of-tokens softmax regression. No bias term, so text without known
// tokens maps to the uniform posterior.
class TextEmotionClassifier : public PosteriorSource {
 public:
  TextEmotionClassifier() = default;

  static TextEmotionClassifier train(std::span<const std::string> texts,
                                     std::span<const int> labels,
                                     std::vector<std::string> category_names,
                                     const ClassifierConfig& config);

  EmotionPosterior predict_posterior(std::string_view text) const override;
  int category_count() const override { return static_cast<int>(categories_.size()); }

  const std::vector<std::string>& categories() const { return categories_; }
  const Matrix& weights() const { return weights_; }
  const std::vector<std::string>& vocabulary() const { return vocabulary_; }

  // Text format: "emotts-classifier 1", a categories line, a vocab size
  // line, then one "token<TAB>w_1 ... w_M" line per token.
  void save(const std::filesystem::path& path) const;
  static TextEmotionClassifier load(const std::filesystem::path& path);

 private:
  Vector features(std::string_view text, bool& any_known) const;

  std::vector<std::string> categories_;
  std::vector<std::string> vocabulary_;
  std::unordered_map<std::string, int> index_;
  Matrix weights_;  // vocabulary x M
};

}  // namespace emotts
