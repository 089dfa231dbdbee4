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

#include <filesystem>

#include <gtest/gtest.h>

#include "emotts/classifier.hpp"

namespace emotts {
namespace {

struct TinyCorpus {
  std::vector<std::string> texts;
  std::vector<int> labels;
  std::vector<std::string> categories;
};

TinyCorpus tiny_corpus(int per_category, std::uint64_t seed) {
  GeneratorConfig cfg;
  cfg.min_syllables = 3;
  cfg.max_syllables = 5;
  TinyCorpus out;
  out.categories = cfg.categories;
  for (const auto& u : generate_synthetic_corpus(seed, per_category, cfg)) {
    out.texts.push_back(u.text);
    out.labels.push_back(u.emotion);
  }
  return out;
}

TEST(Tokenize, LowercasesAndSplitsOnPunctuation) {
  EXPECT_EQ(tokenize("Hello, WORLD!  p3p14"), (std::vector<std::string>{"hello", "world", "p3p14"}));
  EXPECT_TRUE(tokenize("  ,;  ").empty());
}

TEST(Classifier, OverfitsTenPerCategory) {
  const auto data = tiny_corpus(10, 3);
  const auto model = TextEmotionClassifier::train(data.texts, data.labels, data.categories, {});
  int correct = 0;
  for (std::size_t i = 0; i < data.texts.size(); ++i) {
    const auto p = model.predict_posterior(data.texts[i]);
    EXPECT_TRUE(p.valid());
    correct += p.argmax() == data.labels[i];
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(data.texts.size()), 0.9);
}

TEST(Classifier, MissingCategoryRejected) {
  const std::vector<std::string> texts{"joy joy", "delight"};
  const std::vector<int> labels{1, 1};
  EXPECT_THROW(TextEmotionClassifier::train(texts, labels, {"neutral", "happiness"}, {}), Error);
  EXPECT_THROW(TextEmotionClassifier::train({}, {}, {"neutral", "happiness"}, {}), Error);
}

TEST(Classifier, SameSeedSameParameters) {
  const auto data = tiny_corpus(4, 5);
  ClassifierConfig cfg;
  cfg.epochs = 20;
  cfg.seed = 42;
  const auto a = TextEmotionClassifier::train(data.texts, data.labels, data.categories, cfg);
  const auto b = TextEmotionClassifier::train(data.texts, data.labels, data.categories, cfg);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_EQ(a.vocabulary(), b.vocabulary());
}

TEST(Classifier, DegenerateTextGivesUniform) {
  const auto data = tiny_corpus(3, 6);
  const auto model = TextEmotionClassifier::train(data.texts, data.labels, data.categories, {});
  const auto m = static_cast<double>(data.categories.size());
  for (const char* text : {"", "   ", "zzzunknown qqqnothing", ",,,"}) {
    const auto p = model.predict_posterior(text);
    for (Eigen::Index i = 0; i < p.probs.size(); ++i) EXPECT_DOUBLE_EQ(p.probs(i), 1.0 / m);
  }
}

TEST(Classifier, PosteriorValidForLongText) {
  const auto data = tiny_corpus(3, 7);
  const auto model = TextEmotionClassifier::train(data.texts, data.labels, data.categories, {});
  std::string huge;
  for (int i = 0; i < 20000; ++i) huge += "rage joy tears ";
  EXPECT_TRUE(model.predict_posterior(huge).valid());
  for (const auto& t : data.texts) EXPECT_TRUE(model.predict_posterior(t).valid());
}

TEST(Classifier, CategoryPermutationPermutesPosterior) {
  const auto data = tiny_corpus(5, 8);
  const int m = static_cast<int>(data.categories.size());
  std::vector<int> perm(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<std::size_t>(i)] = (i * 3 + 2) % m;
  std::vector<std::string> permuted_names(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    permuted_names[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])] =
        data.categories[static_cast<std::size_t>(i)];
  }
  std::vector<int> permuted_labels;
  for (int l : data.labels) permuted_labels.push_back(perm[static_cast<std::size_t>(l)]);
  ClassifierConfig cfg;
  cfg.epochs = 50;
  const auto a = TextEmotionClassifier::train(data.texts, data.labels, data.categories, cfg);
  const auto b = TextEmotionClassifier::train(data.texts, permuted_labels, permuted_names, cfg);
  for (const auto& t : data.texts) {
    const auto pa = a.predict_posterior(t), pb = b.predict_posterior(t);
    for (int i = 0; i < m; ++i) EXPECT_NEAR(pa.probs(i), pb.probs(perm[static_cast<std::size_t>(i)]), 1e-9);
  }
}

TEST(Classifier, HeldOutCueAccuracy) {
  const auto train = tiny_corpus(20, 9);
  const auto test = tiny_corpus(10, 10);
  const auto model = TextEmotionClassifier::train(train.texts, train.labels, train.categories, {});
  int correct = 0;
  for (std::size_t i = 0; i < test.texts.size(); ++i) {
    correct += model.predict_posterior(test.texts[i]).argmax() == test.labels[i];
  }
  EXPECT_GE(static_cast<double>(correct) / static_cast<double>(test.texts.size()), 0.8);
}

TEST(Classifier, SaveLoadReproducesPredictions) {
  const auto data = tiny_corpus(3, 11);
  const auto model = TextEmotionClassifier::train(data.texts, data.labels, data.categories, {});
  const auto path = std::filesystem::temp_directory_path() / "emotts_classifier.txt";
  model.save(path);
  const auto loaded = TextEmotionClassifier::load(path);
  EXPECT_EQ(loaded.categories(), model.categories());
  EXPECT_EQ(loaded.weights(), model.weights());
  for (const auto& t : data.texts) {
    EXPECT_EQ(loaded.predict_posterior(t).probs, model.predict_posterior(t).probs);
  }
}

}  // namespace
}  // namespace emotts
