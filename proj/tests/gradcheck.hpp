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

#include <algorithm>
#include <cmath>
#include <functional>

#include "emotts/tensor.hpp"

namespace emotts::testing {

// Central difference of a scalar function with respect to one entry.
inline double central_difference(ad::Var& param, Eigen::Index index,
                                 const std::function<double()>& f, double h = 1e-6) {
  double& x = param.mutable_value().data()[index];
  const double saved = x;
  x = saved + h;
  const double up = f();
  x = saved - h;
  const double down = f();
  x = saved;
  return (up - down) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-8) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Checks d loss / d param for every entry of every param.
inline double max_gradient_error(std::vector<ad::Var> params,
                                 const std::function<ad::Var()>& loss_fn) {
  for (auto& p : params) p.zero_grad();
  ad::backward(loss_fn());
  double worst = 0;
  for (auto& p : params) {
    const ad::Mat analytic = p.grad();
    for (Eigen::Index i = 0; i < p.value().size(); ++i) {
      const double numeric = central_difference(p, i, [&] { return loss_fn().scalar(); });
      const double a = analytic.size() ? analytic.data()[i] : 0.0;
      worst = std::max(worst, relative_error(a, numeric, 1e-6));
    }
  }
  return worst;
}

}  // namespace emotts::testing
