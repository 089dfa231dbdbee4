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
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace emotts::ad {

using Mat = Eigen::MatrixXd;

// One node of the dynamic computation graph. Leaves that require grad are
// parameters; interior nodes carry a backward closure that pushes their
// gradient into their inputs.
struct Node {
  Mat value;
  Mat grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  void accumulate(const Mat& g);
};

// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  const Mat& value() const { return node_->value; }
  Mat& mutable_value() { return node_->value; }
  const Mat& grad() const { return node_->grad; }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  Eigen::Index rows() const { return node_->value.rows(); }
  Eigen::Index cols() const { return node_->value.cols(); }
  double scalar() const { return node_->value(0, 0); }
  bool defined() const { return node_ != nullptr; }

  void zero_grad();
  const std::shared_ptr<Node>& node() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

// While alive, new nodes record no graph (evaluation-mode forward passes).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled();

Var constant(Mat value);
Var parameter(Mat value);

// Reverse sweep from a scalar root. Gradients accumulate into every
// reachable node that requires grad.
void backward(const Var& root);

Var matmul(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var scale(const Var& a, double s);
Var add_scalar(const Var& a, double s);
// a (R x C) + row (1 x C), row broadcast over R.
Var add_row(const Var& a, const Var& row);
// row (1 x C) repeated n times.
Var repeat_rows(const Var& row, Eigen::Index n);

Var sigmoid(const Var& a);
Var tanh(const Var& a);
Var relu(const Var& a);
Var softplus(const Var& a);
Var exp(const Var& a);
Var square(const Var& a);
Var softmax_rows(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
Var mean_rows(const Var& a);  // R x C -> 1 x C

Var concat_cols(std::span<const Var> parts);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count);
Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count);
Var gather_rows(const Var& table, std::span<const int> ids);

// Gradient barrier: same value, no path back to the input.
Var detach(const Var& a);

// Row-wise layer normalization with gain/bias of shape 1 x C.
Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps = 1e-5);

// Inverted dropout. Identity when !training or rate == 0.
Var dropout(const Var& a, double rate, bool training, std::mt19937_64& rng);

// Zero-padded "same" unfold for 1-d convolution over rows: T x C becomes
// T x (K*C), block k holding row t + k - K/2.
Var unfold_time(const Var& x, int kernel);

// Unnormalized Gaussian mixture over memory positions 0..length-1:
// w_j = sum_k pi_k exp(-(j - mu_k)^2 / (2 sigma_k^2)). Inputs are 1 x G.
Var gmm_weights(const Var& pi, const Var& mu, const Var& sigma, Eigen::Index length);

// Mean of elementwise binary cross-entropy on logits.
Var bce_with_logits(const Var& logits, const Mat& targets);

Var mse(const Var& a, const Var& b);            // mean of squared differences
Var squared_distance(const Var& a, const Var& b);  // sum of squared differences

}  // namespace emotts::ad
