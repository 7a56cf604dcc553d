// Copyright 2026 The strudec Authors.
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

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include "strudec/tensor.h"

namespace strudec::testing {

inline Matrix random_matrix(int rows, int cols, std::mt19937_64& rng,
                            double scale = 1.0) {
  std::normal_distribution<double> d(0.0, scale);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = d(rng);
  return m;
}

inline int random_int(std::mt19937_64& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline std::vector<int> random_labels(std::mt19937_64& rng, int n, int v) {
  std::vector<int> out(n);
  for (int& y : out) y = random_int(rng, 0, v - 1);
  return out;
}

// Central differences of f with respect to every entry of x.
inline Matrix numeric_gradient(const std::function<double()>& f, Matrix& x,
                               double h = 1e-5) {
  Matrix g(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double keep = x.data()[i];
    x.data()[i] = keep + h;
    const double up = f();
    x.data()[i] = keep - h;
    const double down = f();
    x.data()[i] = keep;
    g.data()[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// ||a - b|| / max(||a||, ||b||), with a floor for near-zero gradients.
inline double relative_error(const Matrix& a, const Matrix& b,
                             double floor = 1e-8) {
  const double denom = std::max({a.norm(), b.norm(), floor});
  return (a - b).norm() / denom;
}

// Every label sequence of length n over v labels, in lexicographic order.
inline std::vector<std::vector<int>> all_paths(int n, int v) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(n, 0);
  while (true) {
    out.push_back(cur);
    int i = n - 1;
    while (i >= 0 && ++cur[i] == v) cur[i--] = 0;
    if (i < 0) break;
  }
  return out;
}

// Independent path scorer: emissions plus transitions[i-1](y[i-1], y[i]).
inline double score_path(const Matrix& scores,
                         const std::vector<Matrix>& transitions,
                         const std::vector<int>& y) {
  double s = scores(0, y[0]);
  for (std::size_t i = 1; i < y.size(); ++i) {
    s += scores(static_cast<Eigen::Index>(i), y[i]) +
         transitions[i - 1](y[i - 1], y[i]);
  }
  return s;
}

inline std::vector<Matrix> repeat(const Matrix& m, int count) {
  return std::vector<Matrix>(static_cast<std::size_t>(std::max(count, 0)), m);
}

}  // namespace strudec::testing
