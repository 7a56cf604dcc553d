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

#include "strudec/errors.h"
#include "strudec/ops.h"
#include "strudec/training.h"

namespace strudec {

Var nar_loss(const Var& scores, std::span<const int> gold, double eps) {
  const int n = scores.rows();
  const int v = scores.cols();
  if (static_cast<int>(gold.size()) != n) {
    throw ContractError("gold length differs from the number of positions");
  }
  if (eps < 0.0 || eps >= 1.0) {
    throw ContractError("label smoothing must lie in [0, 1)");
  }
  std::vector<int> rows(n);
  for (int i = 0; i < n; ++i) {
    if (gold[i] < 0 || gold[i] >= v) {
      throw ContractError("gold label out of range");
    }
    rows[i] = i;
  }
  Var lp = ops::log_softmax_rows(scores);
  Var picked = ops::sum_entries(lp, rows, gold);
  Var total = ops::scale(picked, 1.0 - eps);
  if (eps > 0.0) total = ops::add(total, ops::scale(ops::sum(lp), eps / v));
  return ops::scale(total, -1.0 / n);
}

Var joint_loss(const Var& crf_nll, const Var& nar, double lambda) {
  return ops::add(crf_nll, ops::scale(nar, lambda));
}

double joint_loss(double crf_nll, double nar, double lambda) {
  return crf_nll + lambda * nar;
}

}  // namespace strudec
