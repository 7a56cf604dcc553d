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

#include <deque>
#include <functional>
#include <unordered_map>
#include <vector>

#include "strudec/tensor.h"

namespace strudec {

class Tape;

// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
// owning tape is alive.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  int rows() const { return static_cast<int>(value().rows()); }
  int cols() const { return static_cast<int>(value().cols()); }
  double item() const;

  Tape* tape() const { return tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  int id_ = -1;
};

// Ordered record of operations for one forward/backward pass. Nodes are
// appended in evaluation order, so a reverse sweep is a valid topological
// order. A tape built with record_grad = false keeps values only.
class Tape {
 public:
  // Receives the gradient of the node's output; must push contributions into
  // the parents through accumulate().
  using BackwardFn = std::function<void(Tape&, const Matrix&)>;

  explicit Tape(bool record_grad = true) : record_grad_(record_grad) {}
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);

  // Leaf bound to a parameter. The value is referenced, not copied; repeated
  // calls for the same tensor return the same node.
  Var param(Tensor& t);

  // Records an op output. The backward function is dropped when no parent
  // needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> parents, BackwardFn fn);
  Var record(Matrix value, const std::vector<Var>& parents, BackwardFn fn);

  bool needs_grad(const Var& v) const { return nodes_[v.id_].needs_grad; }
  bool recording() const { return record_grad_; }

  // Adds g into the gradient buffer of v (no-op if v needs no gradient).
  void accumulate(const Var& v, const Matrix& g);
  // Zero-initialized gradient buffer of v for in-place scatter updates.
  Matrix& grad_buffer(const Var& v);

  // Reverse sweep from a 1x1 loss. Throws ContractError otherwise.
  void backward(const Var& loss);

  // Gradient of a parameter after backward(); nullptr if it was not reached.
  const Matrix* grad(const Tensor& t) const;
  const Matrix* grad(const Var& v) const;

  std::size_t size() const { return nodes_.size(); }

 private:
  friend class Var;

  struct Node {
    Matrix value;
    const Matrix* ref = nullptr;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    BackwardFn backward;

    const Matrix& get() const { return ref != nullptr ? *ref : value; }
  };

  Var push(Node node);

  bool record_grad_;
  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, int> param_nodes_;
};

}  // namespace strudec
