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

#include "emotts/classifier.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace emotts {

EmotionPosterior EmotionPosterior::uniform(int categories) {
  return {Vector::Constant(categories, 1.0 / categories)};
}

EmotionPosterior EmotionPosterior::one_hot(int categories, int index) {
  if (index < 0 || index >= categories) throw Error("one_hot: category out of range");
  EmotionPosterior p{Vector::Zero(categories)};
  p.probs(index) = 1.0;
  return p;
}

int EmotionPosterior::argmax() const {
  Eigen::Index i = 0;
  probs.maxCoeff(&i);
  return static_cast<int>(i);
}

bool EmotionPosterior::valid(double tol) const {
  if (probs.size() == 0) return false;
  for (Eigen::Index i = 0; i < probs.size(); ++i) {
    if (!(probs(i) >= 0.0)) return false;
  }
  return std::abs(probs.sum() - 1.0) <= tol;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

namespace {

Vector softmax(const Vector& logits) {
  Vector p = (logits.array() - logits.maxCoeff()).exp();
  return p / p.sum();
}

}  // namespace

Vector TextEmotionClassifier::features(std::string_view text, bool& any_known) const {
  Vector x = Vector::Zero(static_cast<Eigen::Index>(vocabulary_.size()));
  const auto tokens = tokenize(text);
  int known = 0;
  for (const auto& t : tokens) {
    auto it = index_.find(t);
    if (it == index_.end()) continue;
    x(it->second) += 1.0;
    ++known;
  }
  any_known = known > 0;
  if (any_known) x /= static_cast<double>(known);
  return x;
}

TextEmotionClassifier TextEmotionClassifier::train(std::span<const std::string> texts,
                                                   std::span<const int> labels,
                                                   std::vector<std::string> category_names,
                                                   const ClassifierConfig& config) {
  if (texts.empty()) throw Error("classifier: empty training corpus");
  if (texts.size() != labels.size()) throw Error("classifier: texts and labels differ in length");
  const int m = static_cast<int>(category_names.size());
  if (m < 2) throw Error("classifier: need at least two categories");
  std::vector<int> per_class(static_cast<std::size_t>(m), 0);
  for (int l : labels) {
    if (l < 0 || l >= m) throw Error("classifier: label " + std::to_string(l) + " out of range");
    ++per_class[static_cast<std::size_t>(l)];
  }
  for (int c = 0; c < m; ++c) {
    if (per_class[static_cast<std::size_t>(c)] == 0) {
      throw Error("classifier: no examples for category \"" +
                  category_names[static_cast<std::size_t>(c)] + "\"");
    }
  }

  TextEmotionClassifier model;
  model.categories_ = std::move(category_names);
  std::map<std::string, int> sorted_vocab;
  for (const auto& t : texts) {
    for (auto& tok : tokenize(t)) sorted_vocab.emplace(std::move(tok), 0);
  }
  for (auto& [tok, idx] : sorted_vocab) {
    idx = static_cast<int>(model.vocabulary_.size());
    model.vocabulary_.push_back(tok);
    model.index_.emplace(tok, idx);
  }
  const auto v = static_cast<Eigen::Index>(model.vocabulary_.size());
  model.weights_ = Matrix::Zero(v, m);

  std::vector<Vector> xs;
  std::vector<bool> usable;
  for (const auto& t : texts) {
    bool any = false;
    xs.push_back(model.features(t, any));
    usable.push_back(any);
  }

  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(texts.size());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t batch =
      config.batch_size > 0 ? static_cast<std::size_t>(config.batch_size) : texts.size();
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t end = std::min(order.size(), start + batch);
      Matrix grad = config.l2 * model.weights_;
      for (std::size_t i = start; i < end; ++i) {
        const std::size_t n = order[i];
        if (!usable[n]) continue;
        Vector p = softmax(model.weights_.transpose() * xs[n]);
        p(labels[n]) -= 1.0;
        grad.noalias() += xs[n] * p.transpose() / static_cast<double>(end - start);
      }
      model.weights_ -= config.learning_rate * grad;
    }
  }
  return model;
}

EmotionPosterior TextEmotionClassifier::predict_posterior(std::string_view text) const {
  const int m = category_count();
  bool any = false;
  const Vector x = features(text, any);
  if (!any) return EmotionPosterior::uniform(m);
  return {softmax(weights_.transpose() * x)};
}

void TextEmotionClassifier::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write classifier " + path.string());
  out << "emotts-classifier 1\n";
  out << "categories";
  for (const auto& c : categories_) out << '\t' << c;
  out << "\nvocab " << vocabulary_.size() << '\n';
  char buf[32];
  for (std::size_t i = 0; i < vocabulary_.size(); ++i) {
    out << vocabulary_[i] << '\t';
    for (Eigen::Index c = 0; c < weights_.cols(); ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", weights_(static_cast<Eigen::Index>(i), c));
      out << (c ? " " : "") << buf;
    }
    out << '\n';
  }
}

TextEmotionClassifier TextEmotionClassifier::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open classifier " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "emotts-classifier 1") {
    throw Error("bad classifier header in " + path.string());
  }
  TextEmotionClassifier model;
  if (!std::getline(in, line) || line.rfind("categories", 0) != 0) {
    throw Error("classifier: missing categories line");
  }
  std::istringstream cats(line.substr(10));
  for (std::string c; cats >> c;) model.categories_.push_back(c);
  std::size_t v = 0;
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "vocab %zu", &v) != 1) {
    throw Error("classifier: missing vocab line");
  }
  const auto m = static_cast<Eigen::Index>(model.categories_.size());
  model.weights_ = Matrix::Zero(static_cast<Eigen::Index>(v), m);
  for (std::size_t i = 0; i < v; ++i) {
    if (!std::getline(in, line)) throw Error("classifier: truncated weight table");
    const auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("classifier: malformed weight row");
    const std::string tok = line.substr(0, tab);
    std::istringstream ws(line.substr(tab + 1));
    for (Eigen::Index c = 0; c < m; ++c) {
      if (!(ws >> model.weights_(static_cast<Eigen::Index>(i), c))) {
        throw Error("classifier: short weight row for " + tok);
      }
    }
    model.index_.emplace(tok, static_cast<int>(i));
    model.vocabulary_.push_back(tok);
  }
  return model;
}

}  // namespace emotts
