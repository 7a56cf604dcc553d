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

#include "strudec/tape.h"

#include "strudec/errors.h"

namespace strudec {

const Matrix& Var::value() const {
  if (tape_ == nullptr) throw ContractError("use of an unbound Var");
  return tape_->nodes_[id_].get();
}

double Var::item() const {
  const Matrix& v = value();
  if (v.rows() != 1 || v.cols() != 1) {
    throw ShapeError("item() requires a 1x1 value");
  }
  return v(0, 0);
}

Var Tape::push(Node node) {
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size()) - 1);
}

Var Tape::constant(Matrix value) {
  Node n;
  n.value = std::move(value);
  return push(std::move(n));
}

Var Tape::param(Tensor& t) {
  if (auto it = param_nodes_.find(&t); it != param_nodes_.end()) {
    return Var(this, it->second);
  }
  Node n;
  n.ref = &t.data();
  n.needs_grad = record_grad_ && t.requires_grad();
  Var v = push(std::move(n));
  param_nodes_.emplace(&t, v.id_);
  return v;
}

Var Tape::record(Matrix value, std::initializer_list<Var> parents,
                 BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_grad_) {
    for (const Var& p : parents) {
      if (nodes_[p.id_].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  if (n.needs_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

Var Tape::record(Matrix value, const std::vector<Var>& parents,
                 BackwardFn fn) {
  Node n;
  n.value = std::move(value);
  if (record_grad_) {
    for (const Var& p : parents) {
      if (nodes_[p.id_].needs_grad) {
        n.needs_grad = true;
        break;
      }
    }
  }
  if (n.needs_grad) n.backward = std::move(fn);
  return push(std::move(n));
}

void Tape::accumulate(const Var& v, const Matrix& g) {
  Node& n = nodes_[v.id_];
  if (!n.needs_grad) return;
  if (!n.has_grad) {
    n.grad = g;
    n.has_grad = true;
  } else {
    n.grad += g;
  }
}

Matrix& Tape::grad_buffer(const Var& v) {
  Node& n = nodes_[v.id_];
  if (!n.has_grad) {
    const Matrix& val = n.get();
    n.grad = Matrix::Zero(val.rows(), val.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(const Var& loss) {
  if (loss.tape_ != this) throw ContractError("loss belongs to another tape");
  const Matrix& lv = nodes_[loss.id_].get();
  if (lv.rows() != 1 || lv.cols() != 1) {
    throw ContractError("backward() requires a scalar loss");
  }
  if (!nodes_[loss.id_].needs_grad) return;
  accumulate(loss, Matrix::Ones(1, 1));
  for (int i = loss.id_; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    n.backward(*this, n.grad);
  }
}

const Matrix* Tape::grad(const Tensor& t) const {
  auto it = param_nodes_.find(&t);
  if (it == param_nodes_.end()) return nullptr;
  const Node& n = nodes_[it->second];
  return n.has_grad ? &n.grad : nullptr;
}

const Matrix* Tape::grad(const Var& v) const {
  const Node& n = nodes_[v.id_];
  return n.has_grad ? &n.grad : nullptr;
}

}  // namespace strudec
