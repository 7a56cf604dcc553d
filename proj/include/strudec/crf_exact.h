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

#include "strudec/tensor.h"

// Exact linear-chain CRF over a dense transition matrix. Used as ground truth
// for the beam-approximated CRF and for small-vocabulary experiments.
//
// Conventions: `scores` is n x V with scores(i, y) the emission score of label
// y at position i. A static `transition` is V x V with transition(a, b) the
// score of moving from a at i-1 to b at i. The positional overloads take n-1
// matrices, where transitions[i-1] scores the pair (i-1, i).
namespace strudec::crf {

struct ViterbiResult {
  std::vector<int> path;
  double score = 0.0;
};

struct CrfResult {
  double log_partition = 0.0;
  std::vector<int> best_path;
  double best_path_score = 0.0;
};

struct Marginals {
  Matrix unary;                  // n x V
  std::vector<Matrix> pairwise;  // n-1 matrices of V x V
};

struct NllGrad {
  double nll = 0.0;
  Matrix grad_scores;      // n x V
  Matrix grad_transition;  // V x V (static overload only)
  std::vector<Matrix> grad_transitions;  // positional overload only
};

// Largest path count the brute-force enumerator accepts.
inline constexpr double kBruteForceLimit = 1e7;

double path_score(const Matrix& scores, const Matrix& transition,
                  std::span<const int> path);
double path_score(const Matrix& scores, const std::vector<Matrix>& transitions,
                  std::span<const int> path);

// Enumerates all V^n paths. Throws RefusalError above kBruteForceLimit.
double log_partition_bruteforce(const Matrix& scores,
                                const Matrix& transition);
double log_partition_bruteforce(const Matrix& scores,
                                const std::vector<Matrix>& transitions);

double log_partition_forward(const Matrix& scores, const Matrix& transition);
double log_partition_forward(const Matrix& scores,
                             const std::vector<Matrix>& transitions);

// Max-plus recursion; ties resolve to the smaller label id.
ViterbiResult viterbi_exact(const Matrix& scores, const Matrix& transition);
ViterbiResult viterbi_exact(const Matrix& scores,
                            const std::vector<Matrix>& transitions);

Marginals marginals(const Matrix& scores, const Matrix& transition);
Marginals marginals(const Matrix& scores,
                    const std::vector<Matrix>& transitions);

// Negative log-likelihood of `gold` and its analytic gradient
// (posterior marginals minus gold indicator counts).
NllGrad nll_and_grad(const Matrix& scores, const Matrix& transition,
                     std::span<const int> gold);
NllGrad nll_and_grad(const Matrix& scores,
                     const std::vector<Matrix>& transitions,
                     std::span<const int> gold);

CrfResult solve(const Matrix& scores, const Matrix& transition);

}  // namespace strudec::crf
