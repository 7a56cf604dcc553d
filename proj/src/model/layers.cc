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

#include <cmath>
#include <limits>

#include "strudec/errors.h"
#include "strudec/model.h"
#include "strudec/ops.h"

namespace strudec::nn {

Var attention(const Var& q, const Var& k, const Var& v,
              const std::vector<bool>* mask, int d_model) {
  if (q.cols() != k.cols()) throw ShapeError("attention: query/key widths differ");
  if (k.rows() != v.rows()) {
    throw ShapeError("attention: key/value row counts differ");
  }
  Var logits = ops::scale(ops::matmul_nt(q, k), 1.0 / std::sqrt(d_model));
  if (mask != nullptr) {
    logits = ops::masked_fill(logits, *mask,
                              -std::numeric_limits<double>::infinity());
  }
  return ops::matmul(ops::softmax_rows(logits), v);
}

Matrix sinusoid_positions(int length, int d_model) {
  Matrix pe(length, d_model);
  for (int pos = 0; pos < length; ++pos) {
    for (int i = 0; i < d_model; ++i) {
      const double rate =
          std::pow(10000.0, static_cast<double>(2 * (i / 2)) / d_model);
      pe(pos, i) = (i % 2 == 0) ? std::sin(pos / rate) : std::cos(pos / rate);
    }
  }
  return pe;
}

std::vector<bool> causal_mask(int length) {
  std::vector<bool> m(static_cast<std::size_t>(length) * length, false);
  for (int i = 0; i < length; ++i) {
    for (int j = i + 1; j < length; ++j) m[i * length + j] = true;
  }
  return m;
}

Var ffn(const Var& x, const Var& w1, const Var& b1, const Var& w2,
        const Var& b2) {
  Var hid = ops::relu(ops::add_row(ops::matmul(x, w1), b1));
  return ops::add_row(ops::matmul(hid, w2), b2);
}

}  // namespace strudec::nn
