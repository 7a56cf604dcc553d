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

#include "strudec/tensor.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "strudec/errors.h"

namespace strudec {

Tensor::Tensor(Matrix data, bool requires_grad)
    : data_(std::move(data)), requires_grad_(requires_grad) {}

Tensor Tensor::zeros(int rows, int cols, bool requires_grad) {
  if (rows <= 0 || cols <= 0) {
    throw ShapeError("tensor dims must be positive");
  }
  return Tensor(Matrix::Zero(rows, cols), requires_grad);
}

Tensor& ParameterSet::add(std::string name, Matrix init) {
  if (find(name) != nullptr) {
    throw ContractError("duplicate parameter name: " + name);
  }
  entries_.push_back(
      {std::move(name), std::make_unique<Tensor>(std::move(init), true)});
  return *entries_.back().tensor;
}

Tensor* ParameterSet::find(std::string_view name) {
  for (auto& e : entries_) {
    if (e.name == name) return e.tensor.get();
  }
  return nullptr;
}

const Tensor* ParameterSet::find(std::string_view name) const {
  for (const auto& e : entries_) {
    if (e.name == name) return e.tensor.get();
  }
  return nullptr;
}

Tensor& ParameterSet::at(std::string_view name) {
  Tensor* t = find(name);
  if (t == nullptr) {
    throw ContractError("unknown parameter: " + std::string(name));
  }
  return *t;
}

const Tensor& ParameterSet::at(std::string_view name) const {
  return const_cast<ParameterSet*>(this)->at(name);
}

std::int64_t ParameterSet::num_elements() const {
  std::int64_t n = 0;
  for (const auto& e : entries_) n += e.tensor->size();
  return n;
}

Matrix glorot_uniform(int fan_in, int fan_out, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / (fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Matrix m(fan_in, fan_out);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = dist(rng);
  return m;
}

RowVector softmax(const RowVector& v) {
  if (v.size() == 0) throw ShapeError("softmax of empty vector");
  const double mx = v.maxCoeff();
  RowVector e = (v.array() - mx).exp().matrix();
  return e / e.sum();
}

double logsumexp(std::span<const double> v) {
  if (v.empty()) throw ShapeError("logsumexp of empty vector");
  const double mx = *std::max_element(v.begin(), v.end());
  if (mx == -std::numeric_limits<double>::infinity()) return mx;
  double s = 0.0;
  for (double x : v) s += std::exp(x - mx);
  return mx + std::log(s);
}

double logsumexp(const RowVector& v) {
  return logsumexp(std::span<const double>(v.data(), v.size()));
}

}  // namespace strudec
