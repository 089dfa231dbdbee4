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

#include "emotts/tensor.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace emotts::ad {

namespace {

thread_local bool g_grad_enabled = true;

Var make(Mat value, std::vector<std::shared_ptr<Node>> inputs,
         std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  if (!g_grad_enabled) return Var(std::move(node));
  for (const auto& in : inputs) {
    if (in->requires_grad) {
      node->requires_grad = true;
      break;
    }
  }
  if (node->requires_grad) {
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return Var(std::move(node));
}

void check_same_shape(const Var& a, const Var& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch");
  }
}

Mat stable_softplus(const Mat& x) {
  return x.unaryExpr([](double v) {
    return v > 30.0 ? v : std::log1p(std::exp(v));
  });
}

Mat logistic(const Mat& x) {
  return x.unaryExpr([](double v) {
    if (v >= 0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() { return g_grad_enabled; }

void Node::accumulate(const Mat& g) {
  if (!requires_grad) return;
  if (grad.size() == 0) {
    grad = g;
  } else {
    grad += g;
  }
}

void Var::zero_grad() {
  if (node_) node_->grad.resize(0, 0);
}

Var constant(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  return Var(std::move(node));
}

Var parameter(Mat value) {
  auto node = std::make_shared<Node>();
  node->value = std::move(value);
  node->requires_grad = true;
  return Var(std::move(node));
}

void backward(const Var& root) {
  if (!root.requires_grad()) return;
  if (root.value().size() != 1) {
    throw std::invalid_argument("backward: root must be a scalar");
  }
  // Iterative post-order DFS; decoder graphs are deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> seen;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  seen.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->inputs.size()) {
      Node* child = node->inputs[next++].get();
      if (child->requires_grad && seen.insert(child).second) {
        stack.emplace_back(child, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }
  root.node()->accumulate(Mat::Ones(1, 1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward && node->grad.size() != 0) node->backward(*node);
  }
}

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
  auto an = a.node(), bn = b.node();
  return make(a.value() * b.value(), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad * bn->value.transpose());
    if (bn->requires_grad) bn->accumulate(an->value.transpose() * self.grad);
  });
}

Var add(const Var& a, const Var& b) {
  check_same_shape(a, b, "add");
  auto an = a.node(), bn = b.node();
  return make(a.value() + b.value(), {an, bn}, [an, bn](Node& self) {
    an->accumulate(self.grad);
    bn->accumulate(self.grad);
  });
}

Var sub(const Var& a, const Var& b) {
  check_same_shape(a, b, "sub");
  auto an = a.node(), bn = b.node();
  return make(a.value() - b.value(), {an, bn}, [an, bn](Node& self) {
    an->accumulate(self.grad);
    if (bn->requires_grad) bn->accumulate(-self.grad);
  });
}

Var mul(const Var& a, const Var& b) {
  check_same_shape(a, b, "mul");
  auto an = a.node(), bn = b.node();
  return make(a.value().cwiseProduct(b.value()), {an, bn}, [an, bn](Node& self) {
    if (an->requires_grad) an->accumulate(self.grad.cwiseProduct(bn->value));
    if (bn->requires_grad) bn->accumulate(self.grad.cwiseProduct(an->value));
  });
}

Var scale(const Var& a, double s) {
  auto an = a.node();
  return make(a.value() * s, {an}, [an, s](Node& self) { an->accumulate(self.grad * s); });
}

Var add_scalar(const Var& a, double s) {
  auto an = a.node();
  return make(a.value().array() + s, {an}, [an](Node& self) { an->accumulate(self.grad); });
}

Var add_row(const Var& a, const Var& row) {
  if (row.rows() != 1 || row.cols() != a.cols()) {
    throw std::invalid_argument("add_row: shape mismatch");
  }
  auto an = a.node(), rn = row.node();
  Mat out = a.value().rowwise() + row.value().row(0);
  return make(std::move(out), {an, rn}, [an, rn](Node& self) {
    an->accumulate(self.grad);
    if (rn->requires_grad) rn->accumulate(self.grad.colwise().sum());
  });
}

Var repeat_rows(const Var& row, Eigen::Index n) {
  if (row.rows() != 1) throw std::invalid_argument("repeat_rows: expects a row");
  auto rn = row.node();
  Mat out = row.value().replicate(n, 1);
  return make(std::move(out), {rn}, [rn](Node& self) {
    rn->accumulate(self.grad.colwise().sum());
  });
}

Var sigmoid(const Var& a) {
  auto an = a.node();
  Mat y = logistic(a.value());
  return make(y, {an}, [an](Node& self) {
    const Mat& s = self.value;
    an->accumulate(self.grad.cwiseProduct(s.cwiseProduct((1.0 - s.array()).matrix())));
  });
}

Var tanh(const Var& a) {
  auto an = a.node();
  Mat y = a.value().array().tanh().matrix();
  return make(y, {an}, [an](Node& self) {
    an->accumulate(self.grad.cwiseProduct((1.0 - self.value.array().square()).matrix()));
  });
}

Var relu(const Var& a) {
  auto an = a.node();
  return make(a.value().cwiseMax(0.0), {an}, [an](Node& self) {
    Mat mask = (an->value.array() > 0.0).cast<double>().matrix();
    an->accumulate(self.grad.cwiseProduct(mask));
  });
}

Var softplus(const Var& a) {
  auto an = a.node();
  return make(stable_softplus(a.value()), {an}, [an](Node& self) {
    an->accumulate(self.grad.cwiseProduct(logistic(an->value)));
  });
}

Var exp(const Var& a) {
  auto an = a.node();
  return make(a.value().array().exp().matrix(), {an}, [an](Node& self) {
    an->accumulate(self.grad.cwiseProduct(self.value));
  });
}

Var square(const Var& a) {
  auto an = a.node();
  return make(a.value().array().square().matrix(), {an}, [an](Node& self) {
    an->accumulate(2.0 * self.grad.cwiseProduct(an->value));
  });
}

Var softmax_rows(const Var& a) {
  auto an = a.node();
  Mat y(a.rows(), a.cols());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    Eigen::RowVectorXd row = a.value().row(r);
    row.array() -= row.maxCoeff();
    row = row.array().exp();
    y.row(r) = row / row.sum();
  }
  return make(std::move(y), {an}, [an](Node& self) {
    const Mat& s = self.value;
    Mat g(s.rows(), s.cols());
    for (Eigen::Index r = 0; r < s.rows(); ++r) {
      const double dot = self.grad.row(r).dot(s.row(r));
      g.row(r) = s.row(r).cwiseProduct((self.grad.row(r).array() - dot).matrix());
    }
    an->accumulate(g);
  });
}

Var sum(const Var& a) {
  auto an = a.node();
  Mat out(1, 1);
  out(0, 0) = a.value().sum();
  return make(std::move(out), {an}, [an](Node& self) {
    an->accumulate(Mat::Constant(an->value.rows(), an->value.cols(), self.grad(0, 0)));
  });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  return scale(sum(a), 1.0 / n);
}

Var mean_rows(const Var& a) {
  auto an = a.node();
  const double n = static_cast<double>(a.rows());
  Mat out = a.value().colwise().mean();
  return make(std::move(out), {an}, [an, n](Node& self) {
    an->accumulate((self.grad / n).replicate(an->value.rows(), 1));
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  const Eigen::Index rows = parts[0].rows();
  Eigen::Index cols = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw std::invalid_argument("concat_cols: row mismatch");
    cols += p.cols();
    inputs.push_back(p.node());
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  return make(std::move(out), inputs, [](Node& self) {
    Eigen::Index offset = 0;
    for (auto& in : self.inputs) {
      const Eigen::Index c = in->value.cols();
      if (in->requires_grad) in->accumulate(self.grad.middleCols(offset, c));
      offset += c;
    }
  });
}

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  const Eigen::Index cols = parts[0].cols();
  Eigen::Index rows = 0;
  std::vector<std::shared_ptr<Node>> inputs;
  for (const auto& p : parts) {
    if (p.cols() != cols) throw std::invalid_argument("concat_rows: column mismatch");
    rows += p.rows();
    inputs.push_back(p.node());
  }
  Mat out(rows, cols);
  Eigen::Index at = 0;
  for (const auto& p : parts) {
    out.middleRows(at, p.rows()) = p.value();
    at += p.rows();
  }
  return make(std::move(out), inputs, [](Node& self) {
    Eigen::Index offset = 0;
    for (auto& in : self.inputs) {
      const Eigen::Index r = in->value.rows();
      if (in->requires_grad) in->accumulate(self.grad.middleRows(offset, r));
      offset += r;
    }
  });
}

Var slice_rows(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.rows()) {
    throw std::out_of_range("slice_rows: range out of bounds");
  }
  auto an = a.node();
  return make(a.value().middleRows(start, count), {an}, [an, start, count](Node& self) {
    Mat g = Mat::Zero(an->value.rows(), an->value.cols());
    g.middleRows(start, count) = self.grad;
    an->accumulate(g);
  });
}

Var slice_cols(const Var& a, Eigen::Index start, Eigen::Index count) {
  if (start < 0 || count < 0 || start + count > a.cols()) {
    throw std::out_of_range("slice_cols: range out of bounds");
  }
  auto an = a.node();
  return make(a.value().middleCols(start, count), {an}, [an, start, count](Node& self) {
    Mat g = Mat::Zero(an->value.rows(), an->value.cols());
    g.middleCols(start, count) = self.grad;
    an->accumulate(g);
  });
}

Var gather_rows(const Var& table, std::span<const int> ids) {
  auto tn = table.node();
  Mat out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw std::out_of_range("gather_rows: id out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.value().row(ids[i]);
  }
  std::vector<int> idx(ids.begin(), ids.end());
  return make(std::move(out), {tn}, [tn, idx = std::move(idx)](Node& self) {
    Mat g = Mat::Zero(tn->value.rows(), tn->value.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      g.row(idx[i]) += self.grad.row(static_cast<Eigen::Index>(i));
    }
    tn->accumulate(g);
  });
}

Var detach(const Var& a) { return constant(a.value()); }

Var layer_norm(const Var& x, const Var& gain, const Var& bias, double eps) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  if (gain.rows() != 1 || gain.cols() != cols || bias.rows() != 1 || bias.cols() != cols) {
    throw std::invalid_argument("layer_norm: parameter shape mismatch");
  }
  Mat xhat(rows, cols);
  Eigen::VectorXd inv_std(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double mu = x.value().row(r).mean();
    const Eigen::RowVectorXd centered = x.value().row(r).array() - mu;
    const double var = centered.squaredNorm() / static_cast<double>(cols);
    inv_std(r) = 1.0 / std::sqrt(var + eps);
    xhat.row(r) = centered * inv_std(r);
  }
  Mat out = (xhat.array().rowwise() * gain.value().row(0).array()).matrix();
  out.rowwise() += bias.value().row(0);
  auto xn = x.node(), gn = gain.node(), bn = bias.node();
  return make(std::move(out), {xn, gn, bn},
              [xn, gn, bn, xhat, inv_std, cols](Node& self) {
    if (gn->requires_grad) gn->accumulate(self.grad.cwiseProduct(xhat).colwise().sum());
    if (bn->requires_grad) bn->accumulate(self.grad.colwise().sum());
    if (!xn->requires_grad) return;
    Mat dxhat = (self.grad.array().rowwise() * gn->value.row(0).array()).matrix();
    Mat dx(dxhat.rows(), cols);
    const double n = static_cast<double>(cols);
    for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
      const double m1 = dxhat.row(r).mean();
      const double m2 = dxhat.row(r).dot(xhat.row(r)) / n;
      dx.row(r) = inv_std(r) * (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
    }
    xn->accumulate(dx);
  });
}

Var dropout(const Var& a, double rate, bool training, std::mt19937_64& rng) {
  if (!training || rate <= 0.0) return a;
  std::bernoulli_distribution keep(1.0 - rate);
  Mat mask(a.rows(), a.cols());
  const double scale_kept = 1.0 / (1.0 - rate);
  for (Eigen::Index i = 0; i < mask.size(); ++i) {
    mask.data()[i] = keep(rng) ? scale_kept : 0.0;
  }
  return mul(a, constant(std::move(mask)));
}

Var unfold_time(const Var& x, int kernel) {
  if (kernel < 1) throw std::invalid_argument("unfold_time: kernel must be positive");
  const Eigen::Index t_len = x.rows(), c = x.cols();
  const int half = kernel / 2;
  Mat out = Mat::Zero(t_len, c * kernel);
  for (Eigen::Index t = 0; t < t_len; ++t) {
    for (int k = 0; k < kernel; ++k) {
      const Eigen::Index src = t + k - half;
      if (src >= 0 && src < t_len) out.block(t, k * c, 1, c) = x.value().row(src);
    }
  }
  auto xn = x.node();
  return make(std::move(out), {xn}, [xn, kernel, half, c](Node& self) {
    const Eigen::Index t_len = xn->value.rows();
    Mat g = Mat::Zero(t_len, c);
    for (Eigen::Index t = 0; t < t_len; ++t) {
      for (int k = 0; k < kernel; ++k) {
        const Eigen::Index src = t + k - half;
        if (src >= 0 && src < t_len) g.row(src) += self.grad.block(t, k * c, 1, c);
      }
    }
    xn->accumulate(g);
  });
}

Var gmm_weights(const Var& pi, const Var& mu, const Var& sigma, Eigen::Index length) {
  const Eigen::Index g = pi.cols();
  if (mu.cols() != g || sigma.cols() != g || pi.rows() != 1 || mu.rows() != 1 ||
      sigma.rows() != 1) {
    throw std::invalid_argument("gmm_weights: parameters must be 1 x G");
  }
  if (length < 1) throw std::invalid_argument("gmm_weights: empty memory");
  // comp(k, j) = exp(-(j - mu_k)^2 / (2 sigma_k^2))
  Mat comp(g, length);
  for (Eigen::Index k = 0; k < g; ++k) {
    const double m = mu.value()(0, k), s = sigma.value()(0, k);
    for (Eigen::Index j = 0; j < length; ++j) {
      const double z = (static_cast<double>(j) - m) / s;
      comp(k, j) = std::exp(-0.5 * z * z);
    }
  }
  Mat out = pi.value() * comp;
  auto pn = pi.node(), mn = mu.node(), sn = sigma.node();
  return make(std::move(out), {pn, mn, sn}, [pn, mn, sn, comp](Node& self) {
    const Eigen::Index g = comp.rows(), length = comp.cols();
    Mat dpi(1, g), dmu(1, g), dsigma(1, g);
    for (Eigen::Index k = 0; k < g; ++k) {
      const double p = pn->value(0, k), m = mn->value(0, k), s = sn->value(0, k);
      double a = 0, b = 0, c = 0;
      for (Eigen::Index j = 0; j < length; ++j) {
        const double gj = self.grad(0, j) * comp(k, j);
        const double d = static_cast<double>(j) - m;
        a += gj;
        b += gj * d;
        c += gj * d * d;
      }
      dpi(0, k) = a;
      dmu(0, k) = p * b / (s * s);
      dsigma(0, k) = p * c / (s * s * s);
    }
    pn->accumulate(dpi);
    mn->accumulate(dmu);
    sn->accumulate(dsigma);
  });
}

Var bce_with_logits(const Var& logits, const Mat& targets) {
  if (logits.rows() != targets.rows() || logits.cols() != targets.cols()) {
    throw std::invalid_argument("bce_with_logits: shape mismatch");
  }
  const Mat& z = logits.value();
  double total = 0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double v = z.data()[i], y = targets.data()[i];
    total += std::max(v, 0.0) - v * y + std::log1p(std::exp(-std::abs(v)));
  }
  const double n = static_cast<double>(z.size());
  Mat out(1, 1);
  out(0, 0) = total / n;
  auto ln = logits.node();
  return make(std::move(out), {ln}, [ln, targets, n](Node& self) {
    ln->accumulate((logistic(ln->value) - targets) * (self.grad(0, 0) / n));
  });
}

Var mse(const Var& a, const Var& b) { return mean(square(sub(a, b))); }

Var squared_distance(const Var& a, const Var& b) { return sum(square(sub(a, b))); }

}  // namespace emotts::ad
