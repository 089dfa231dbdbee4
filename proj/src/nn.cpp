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

#include "emotts/nn.hpp"

#include <cmath>
#include <stdexcept>

namespace emotts::nn {

Var& ParameterStore::add(const std::string& name, Mat init) {
  auto [it, inserted] = params_.emplace(name, ad::parameter(std::move(init)));
  if (!inserted) throw std::logic_error("duplicate parameter: " + name);
  return it->second;
}

Var& ParameterStore::get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

const Var& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw std::out_of_range("unknown parameter: " + name);
  return it->second;
}

std::vector<std::string> ParameterStore::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) {
    if (name.compare(0, prefix.size(), prefix) == 0) out.push_back(name);
  }
  return out;
}

void ParameterStore::zero_grad() {
  for (auto& [_, p] : params_) p.zero_grad();
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, p] : params_) n += static_cast<std::size_t>(p.value().size());
  return n;
}

Mat xavier_uniform(Eigen::Index fan_in, Eigen::Index fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Mat m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

Linear::Linear(ParameterStore& store, const std::string& name, int in, int out,
               std::mt19937_64& rng)
    : in_(in), out_(out) {
  w_ = store.add(name + "/w", xavier_uniform(in, out, rng));
  b_ = store.add(name + "/b", Mat::Zero(1, out));
}

Var Linear::operator()(const Var& x) const { return ad::add_row(ad::matmul(x, w_), b_); }

Conv1d::Conv1d(ParameterStore& store, const std::string& name, int in, int out, int kernel,
               std::mt19937_64& rng)
    : kernel_(kernel) {
  w_ = store.add(name + "/w", xavier_uniform(static_cast<Eigen::Index>(in) * kernel, out, rng));
  b_ = store.add(name + "/b", Mat::Zero(1, out));
}

Var Conv1d::operator()(const Var& x) const {
  return ad::add_row(ad::matmul(ad::unfold_time(x, kernel_), w_), b_);
}

LayerNorm::LayerNorm(ParameterStore& store, const std::string& name, int dim) {
  gain_ = store.add(name + "/gain", Mat::Ones(1, dim));
  bias_ = store.add(name + "/bias", Mat::Zero(1, dim));
}

Var LayerNorm::operator()(const Var& x) const { return ad::layer_norm(x, gain_, bias_); }

GRUCell::GRUCell(ParameterStore& store, const std::string& name, int in, int hidden,
                 std::mt19937_64& rng)
    : hidden_(hidden) {
  wx_ = store.add(name + "/wx", xavier_uniform(in, 3 * hidden, rng));
  wh_ = store.add(name + "/wh", xavier_uniform(hidden, 3 * hidden, rng));
  bx_ = store.add(name + "/bx", Mat::Zero(1, 3 * hidden));
  bh_ = store.add(name + "/bh", Mat::Zero(1, 3 * hidden));
}

Var GRUCell::operator()(const Var& x, const Var& h) const {
  using namespace ad;
  const Var gx = add_row(matmul(x, wx_), bx_);
  const Var gh = add_row(matmul(h, wh_), bh_);
  const Eigen::Index n = hidden_;
  const Var r = sigmoid(add(slice_cols(gx, 0, n), slice_cols(gh, 0, n)));
  const Var z = sigmoid(add(slice_cols(gx, n, n), slice_cols(gh, n, n)));
  const Var cand = tanh(add(slice_cols(gx, 2 * n, n), mul(r, slice_cols(gh, 2 * n, n))));
  // h' = (1 - z) * cand + z * h
  return add(cand, mul(z, sub(h, cand)));
}

Var run_gru(const GRUCell& cell, const Var& x, bool reverse) {
  const Eigen::Index t_len = x.rows();
  std::vector<Var> outputs(static_cast<std::size_t>(t_len));
  Var h = ad::constant(Mat::Zero(1, cell.hidden()));
  for (Eigen::Index i = 0; i < t_len; ++i) {
    const Eigen::Index t = reverse ? t_len - 1 - i : i;
    h = cell(ad::slice_rows(x, t, 1), h);
    outputs[static_cast<std::size_t>(t)] = h;
  }
  return ad::concat_rows(outputs);
}

void Adam::step(ParameterStore& store) {
  ++steps_;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(steps_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(steps_));
  for (const auto& [name, param] : store.all()) {
    const Mat& g = param.grad();
    if (g.size() == 0) continue;
    auto& m = m_[name];
    auto& v = v_[name];
    if (m.size() == 0) {
      m = Mat::Zero(g.rows(), g.cols());
      v = Mat::Zero(g.rows(), g.cols());
    }
    m = options_.beta1 * m + (1.0 - options_.beta1) * g;
    v = options_.beta2 * v + (1.0 - options_.beta2) * g.cwiseProduct(g);
    Var p = param;
    Mat& value = p.mutable_value();
    value.array() -= options_.learning_rate * (m.array() / bc1) /
                     ((v.array() / bc2).sqrt() + options_.eps);
  }
}

}  // namespace emotts::nn
