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
#include <limits>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace emotts::testing {

// Brute-force reference for the squared-slack ranking objective. Kept
// independent of the library: its own objective, no Newton steps.
struct GridProblem {
  std::vector<Eigen::VectorXd> ordered;
  std::vector<Eigen::VectorXd> similar;
  double C = 1.0;

  double objective(const Eigen::VectorXd& w) const {
    double j = 0.5 * w.squaredNorm();
    for (const auto& d : ordered) {
      const double slack = std::max(0.0, 1.0 - w.dot(d));
      j += C * slack * slack;
    }
    for (const auto& d : similar) j += C * w.dot(d) * w.dot(d);
    return j;
  }
};

struct GridResult {
  Eigen::VectorXd w;
  double objective = 0;
};

// Dense grid over a box around the origin, then repeated dense grids over
// shrinking boxes centered on the incumbent. The starting box bounds every
// minimizer: 1/2 |w*|^2 <= J(w*) <= J(0) = C * |ordered|.
inline GridResult grid_search_minimum(const GridProblem& p, int dim, int points = 41,
                                      int levels = 14) {
  const double radius = std::sqrt(2.0 * p.C * static_cast<double>(p.ordered.size())) + 1e-9;
  Eigen::VectorXd center = Eigen::VectorXd::Zero(dim);
  double half = radius;
  GridResult best{center, p.objective(center)};
  std::vector<int> idx(static_cast<std::size_t>(dim));
  for (int level = 0; level < levels; ++level) {
    const double step = 2.0 * half / (points - 1);
    std::fill(idx.begin(), idx.end(), 0);
    while (true) {
      Eigen::VectorXd w(dim);
      for (int d = 0; d < dim; ++d) w(d) = center(d) - half + step * idx[static_cast<std::size_t>(d)];
      const double j = p.objective(w);
      if (j < best.objective) best = {w, j};
      int d = 0;
      while (d < dim && ++idx[static_cast<std::size_t>(d)] == points) idx[static_cast<std::size_t>(d++)] = 0;
      if (d == dim) break;
    }
    center = best.w;
    half = 2.0 * step;
  }
  return best;
}

// Random problem with D <= 3 and at most 20 pairs.
inline GridProblem random_problem(std::mt19937_64& rng, int& dim) {
  std::uniform_int_distribution<int> dims(1, 3), counts(0, 10);
  std::uniform_real_distribution<double> coord(-2.0, 2.0), cs(0.1, 10.0);
  dim = dims(rng);
  GridProblem p;
  p.C = cs(rng);
  int n_ordered = counts(rng), n_similar = counts(rng);
  if (n_ordered + n_similar == 0) n_ordered = 1;
  for (int i = 0; i < n_ordered; ++i) {
    Eigen::VectorXd d(dim);
    for (int k = 0; k < dim; ++k) d(k) = coord(rng);
    p.ordered.push_back(d);
  }
  for (int i = 0; i < n_similar; ++i) {
    Eigen::VectorXd d(dim);
    for (int k = 0; k < dim; ++k) d(k) = 0.5 * coord(rng);
    p.similar.push_back(d);
  }
  return p;
}

}  // namespace emotts::testing
