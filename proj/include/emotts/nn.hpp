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

#include <map>
#include <random>
#include <string>
#include <vector>

#include "emotts/tensor.hpp"

namespace emotts::nn {

using ad::Mat;
using ad::Var;

// Named registry of trainable tensors. Names are hierarchical
// ("encoder/conv0/w") and ordered, which fixes checkpoint layout.
class ParameterStore {
 public:
  Var& add(const std::string& name, Mat init);
  Var& get(const std::string& name);
  const Var& get(const std::string& name) const;
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  const std::map<std::string, Var>& all() const { return params_; }
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  void zero_grad();
  std::size_t scalar_count() const;

 private:
  std::map<std::string, Var> params_;
};

Mat xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng);

class Linear {
 public:
  Linear() = default;
  Linear(ParameterStore& store, const std::string& name, int in, int out,
         std::mt19937_64& rng);
  Var operator()(const Var& x) const;
  int in() const { return in_; }
  int out() const { return out_; }

 private:
  Var w_, b_;
  int in_ = 0, out_ = 0;
};

// 1-d convolution over the time (row) axis with "same" padding.
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(ParameterStore& store, const std::string& name, int in, int out, int kernel,
         std::mt19937_64& rng);
  Var operator()(const Var& x) const;

 private:
  Var w_, b_;
  int kernel_ = 1;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParameterStore& store, const std::string& name, int dim);
  Var operator()(const Var& x) const;

 private:
  Var gain_, bias_;
};

class GRUCell {
 public:
  GRUCell() = default;
  GRUCell(ParameterStore& store, const std::string& name, int in, int hidden,
          std::mt19937_64& rng);
  // x: 1 x in, h: 1 x hidden.
  Var operator()(const Var& x, const Var& h) const;
  int hidden() const { return hidden_; }

 private:
  Var wx_, wh_, bx_, bh_;
  int hidden_ = 0;
};

// Runs a GRU over the rows of x, returning T x hidden.
Var run_gru(const GRUCell& cell, const Var& x, bool reverse);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}
  // Applies one update from the accumulated gradients. Parameters whose
  // gradient was never touched receive no update.
  void step(ParameterStore& store);
  long steps() const { return steps_; }

 private:
  AdamOptions options_;
  std::map<std::string, Mat> m_, v_;
  long steps_ = 0;
};

}  // namespace emotts::nn
