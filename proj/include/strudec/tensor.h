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

#include <Eigen/Core>

#include <cstdint>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace strudec {

using Matrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

// Dense 2-D array of doubles. Vectors are 1xN, scalars 1x1.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Matrix data, bool requires_grad = false);

  static Tensor zeros(int rows, int cols, bool requires_grad = false);

  int rows() const { return static_cast<int>(data_.rows()); }
  int cols() const { return static_cast<int>(data_.cols()); }
  std::vector<int> shape() const { return {rows(), cols()}; }
  std::int64_t size() const { return data_.size(); }

  const Matrix& data() const { return data_; }
  Matrix& data() { return data_; }

  bool requires_grad() const { return requires_grad_; }
  void set_requires_grad(bool v) { requires_grad_ = v; }

 private:
  Matrix data_;
  bool requires_grad_ = false;
};

// Named parameters in registration order. References returned by add() stay
// valid for the lifetime of the set.
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    std::unique_ptr<Tensor> tensor;
  };

  Tensor& add(std::string name, Matrix init);
  Tensor* find(std::string_view name);
  const Tensor* find(std::string_view name) const;
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;

  const std::vector<Entry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }
  std::int64_t num_elements() const;

 private:
  std::vector<Entry> entries_;
};

// Uniform in +-sqrt(6 / (fan_in + fan_out)).
Matrix glorot_uniform(int fan_in, int fan_out, std::mt19937_64& rng);

// Max-shifted softmax of a non-empty vector. Throws ShapeError when empty.
RowVector softmax(const RowVector& v);

// log(sum(exp(v))) stabilized by max subtraction. Throws ShapeError when empty.
double logsumexp(std::span<const double> v);
double logsumexp(const RowVector& v);

}  // namespace strudec
