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

#include <span>
#include <vector>

#include "strudec/tape.h"

// Differentiable operations on tape values. Every op validates shapes and
// throws ShapeError on mismatch.
namespace strudec::ops {

Var matmul(const Var& a, const Var& b);
// a * b^T
Var matmul_nt(const Var& a, const Var& b);
Var transpose(const Var& a);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
// Adds a 1xC row to every row of an RxC matrix.
Var add_row(const Var& a, const Var& row);
Var scale(const Var& a, double c);
Var hadamard(const Var& a, const Var& b);
Var relu(const Var& a);

// Row-wise normalization with learned 1xC gain and bias.
Var layer_norm(const Var& x, const Var& gain, const Var& bias,
               double eps = 1e-5);

// Rows of `table` selected by ids; also serves as embedding lookup.
Var gather_rows(const Var& table, std::span<const int> ids);
// out(i, j) = a(i, idx[i][j]); idx is row-major with `width` columns.
Var gather_per_row(const Var& a, std::span<const int> idx, int width);
// Sum of a(r, c) over the given entries, as a 1x1 value.
Var sum_entries(const Var& a, std::span<const int> rows,
                std::span<const int> cols);

Var concat_cols(const std::vector<Var>& parts);
Var concat_rows(const std::vector<Var>& parts);
Var slice_cols(const Var& a, int start, int count);
Var slice_rows(const Var& a, int start, int count);
Var reshape(const Var& a, int rows, int cols);

// Entries where mask is true are replaced by `fill` (typically -inf).
Var masked_fill(const Var& a, const std::vector<bool>& mask, double fill);

Var softmax_rows(const Var& a);
Var log_softmax_rows(const Var& a);

Var sum(const Var& a);
Var mean(const Var& a);
// log(sum(exp(a))) over all entries, as a 1x1 value.
Var logsumexp(const Var& a);

}  // namespace strudec::ops
