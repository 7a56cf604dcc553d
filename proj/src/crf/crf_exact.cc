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

#include "strudec/crf_exact.h"

#include <cmath>
#include <string>

#include "strudec/errors.h"

namespace strudec::crf {
namespace {

void check_scores(const Matrix& scores) {
  if (scores.rows() < 1 || scores.cols() < 1) {
    throw ShapeError("label scores need n >= 1 and V >= 1");
  }
  if (!scores.allFinite()) throw ContractError("label scores must be finite");
}

// Uniform view over a static matrix or a per-pair list. at(i) scores the
// pair (i-1, i) for i in [1, n).
struct StaticChain {
  const Matrix& m;
  const Matrix& at(Eigen::Index) const { return m; }
};

struct PositionalChain {
  const std::vector<Matrix>& ms;
  const Matrix& at(Eigen::Index i) const { return ms[i - 1]; }
};

void check_static(const Matrix& scores, const Matrix& transition) {
  check_scores(scores);
  if (transition.rows() != scores.cols() ||
      transition.cols() != scores.cols()) {
    throw ShapeError("transition must be VxV with V = " +
                     std::to_string(scores.cols()));
  }
  if (!transition.allFinite()) throw ContractError("transition not finite");
}

void check_positional(const Matrix& scores,
                      const std::vector<Matrix>& transitions) {
  check_scores(scores);
  if (static_cast<Eigen::Index>(transitions.size()) != scores.rows() - 1) {
    throw ShapeError("positional transitions need n-1 matrices");
  }
  for (const Matrix& m : transitions) {
    if (m.rows() != scores.cols() || m.cols() != scores.cols()) {
      throw ShapeError("positional transition must be VxV");
    }
    if (!m.allFinite()) throw ContractError("transition not finite");
  }
}

void check_path(const Matrix& scores, std::span<const int> path) {
  if (static_cast<Eigen::Index>(path.size()) != scores.rows()) {
    throw ContractError("path length differs from sequence length");
  }
  for (int y : path) {
    if (y < 0 || y >= scores.cols()) {
      throw ContractError("label " + std::to_string(y) + " out of range");
    }
  }
}

template <typename Chain>
double path_score_impl(const Matrix& scores, const Chain& chain,
                       std::span<const int> path) {
  check_path(scores, path);
  double s = scores(0, path[0]);
  for (Eigen::Index i = 1; i < scores.rows(); ++i) {
    s += scores(i, path[i]) + chain.at(i)(path[i - 1], path[i]);
  }
  return s;
}

template <typename Chain>
double bruteforce_impl(const Matrix& scores, const Chain& chain) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index v = scores.cols();
  if (std::pow(static_cast<double>(v), static_cast<double>(n)) >
      kBruteForceLimit) {
    throw RefusalError("brute-force enumeration exceeds path limit");
  }
  std::vector<int> path(n, 0);
  std::vector<double> all;
  while (true) {
    all.push_back(path_score_impl(scores, chain, path));
    Eigen::Index pos = n - 1;
    while (pos >= 0 && ++path[pos] == v) {
      path[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
  }
  return logsumexp(all);
}

// alpha(i, b): log-sum of all prefixes ending in b at i.
template <typename Chain>
Matrix forward_table(const Matrix& scores, const Chain& chain) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index v = scores.cols();
  Matrix alpha(n, v);
  alpha.row(0) = scores.row(0);
  std::vector<double> buf(v);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Matrix& m = chain.at(i);
    for (Eigen::Index b = 0; b < v; ++b) {
      for (Eigen::Index a = 0; a < v; ++a) buf[a] = alpha(i - 1, a) + m(a, b);
      alpha(i, b) = logsumexp(buf) + scores(i, b);
    }
  }
  return alpha;
}

// beta(i, a): log-sum of all suffixes after i given label a at i.
template <typename Chain>
Matrix backward_table(const Matrix& scores, const Chain& chain) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index v = scores.cols();
  Matrix beta = Matrix::Zero(n, v);
  std::vector<double> buf(v);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    const Matrix& m = chain.at(i + 1);
    for (Eigen::Index a = 0; a < v; ++a) {
      for (Eigen::Index b = 0; b < v; ++b) {
        buf[b] = m(a, b) + scores(i + 1, b) + beta(i + 1, b);
      }
      beta(i, a) = logsumexp(buf);
    }
  }
  return beta;
}

template <typename Chain>
double forward_impl(const Matrix& scores, const Chain& chain) {
  Matrix alpha = forward_table(scores, chain);
  return logsumexp(RowVector(alpha.row(alpha.rows() - 1)));
}

template <typename Chain>
ViterbiResult viterbi_impl(const Matrix& scores, const Chain& chain) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index v = scores.cols();
  RowVector delta = scores.row(0);
  RowVector next(v);
  std::vector<std::vector<int>> back(n, std::vector<int>(v, 0));
  for (Eigen::Index i = 1; i < n; ++i) {
    const Matrix& m = chain.at(i);
    for (Eigen::Index b = 0; b < v; ++b) {
      int best_a = 0;
      double best = delta[0] + m(0, b);
      for (Eigen::Index a = 1; a < v; ++a) {
        const double cand = delta[a] + m(a, b);
        if (cand > best) {
          best = cand;
          best_a = static_cast<int>(a);
        }
      }
      next[b] = best + scores(i, b);
      back[i][b] = best_a;
    }
    delta.swap(next);
  }
  ViterbiResult out;
  out.path.assign(n, 0);
  int last = 0;
  for (Eigen::Index b = 1; b < v; ++b) {
    if (delta[b] > delta[last]) last = static_cast<int>(b);
  }
  out.score = delta[last];
  out.path[n - 1] = last;
  for (Eigen::Index i = n - 1; i > 0; --i) {
    out.path[i - 1] = back[i][out.path[i]];
  }
  return out;
}

template <typename Chain>
Marginals marginals_impl(const Matrix& scores, const Chain& chain) {
  const Eigen::Index n = scores.rows();
  const Eigen::Index v = scores.cols();
  Matrix alpha = forward_table(scores, chain);
  Matrix beta = backward_table(scores, chain);
  const double log_z = logsumexp(RowVector(alpha.row(n - 1)));
  Marginals out;
  out.unary = ((alpha + beta).array() - log_z).exp();
  for (Eigen::Index i = 1; i < n; ++i) {
    const Matrix& m = chain.at(i);
    Matrix p(v, v);
    for (Eigen::Index a = 0; a < v; ++a) {
      for (Eigen::Index b = 0; b < v; ++b) {
        p(a, b) = std::exp(alpha(i - 1, a) + m(a, b) + scores(i, b) +
                           beta(i, b) - log_z);
      }
    }
    out.pairwise.push_back(std::move(p));
  }
  return out;
}

}  // namespace

double path_score(const Matrix& scores, const Matrix& transition,
                  std::span<const int> path) {
  check_static(scores, transition);
  return path_score_impl(scores, StaticChain{transition}, path);
}

double path_score(const Matrix& scores, const std::vector<Matrix>& transitions,
                  std::span<const int> path) {
  check_positional(scores, transitions);
  return path_score_impl(scores, PositionalChain{transitions}, path);
}

double log_partition_bruteforce(const Matrix& scores,
                                const Matrix& transition) {
  check_static(scores, transition);
  return bruteforce_impl(scores, StaticChain{transition});
}

double log_partition_bruteforce(const Matrix& scores,
                                const std::vector<Matrix>& transitions) {
  check_positional(scores, transitions);
  return bruteforce_impl(scores, PositionalChain{transitions});
}

double log_partition_forward(const Matrix& scores, const Matrix& transition) {
  check_static(scores, transition);
  return forward_impl(scores, StaticChain{transition});
}

double log_partition_forward(const Matrix& scores,
                             const std::vector<Matrix>& transitions) {
  check_positional(scores, transitions);
  return forward_impl(scores, PositionalChain{transitions});
}

ViterbiResult viterbi_exact(const Matrix& scores, const Matrix& transition) {
  check_static(scores, transition);
  return viterbi_impl(scores, StaticChain{transition});
}

ViterbiResult viterbi_exact(const Matrix& scores,
                            const std::vector<Matrix>& transitions) {
  check_positional(scores, transitions);
  return viterbi_impl(scores, PositionalChain{transitions});
}

Marginals marginals(const Matrix& scores, const Matrix& transition) {
  check_static(scores, transition);
  return marginals_impl(scores, StaticChain{transition});
}

Marginals marginals(const Matrix& scores,
                    const std::vector<Matrix>& transitions) {
  check_positional(scores, transitions);
  return marginals_impl(scores, PositionalChain{transitions});
}

NllGrad nll_and_grad(const Matrix& scores, const Matrix& transition,
                     std::span<const int> gold) {
  check_static(scores, transition);
  check_path(scores, gold);
  const StaticChain chain{transition};
  Marginals mg = marginals_impl(scores, chain);
  NllGrad out;
  out.nll = forward_impl(scores, chain) - path_score_impl(scores, chain, gold);
  out.grad_scores = mg.unary;
  out.grad_transition = Matrix::Zero(scores.cols(), scores.cols());
  for (const Matrix& p : mg.pairwise) out.grad_transition += p;
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    out.grad_scores(i, gold[i]) -= 1.0;
    if (i > 0) out.grad_transition(gold[i - 1], gold[i]) -= 1.0;
  }
  return out;
}

NllGrad nll_and_grad(const Matrix& scores,
                     const std::vector<Matrix>& transitions,
                     std::span<const int> gold) {
  check_positional(scores, transitions);
  check_path(scores, gold);
  const PositionalChain chain{transitions};
  Marginals mg = marginals_impl(scores, chain);
  NllGrad out;
  out.nll = forward_impl(scores, chain) - path_score_impl(scores, chain, gold);
  out.grad_scores = mg.unary;
  out.grad_transitions = std::move(mg.pairwise);
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    out.grad_scores(i, gold[i]) -= 1.0;
    if (i > 0) out.grad_transitions[i - 1](gold[i - 1], gold[i]) -= 1.0;
  }
  return out;
}

CrfResult solve(const Matrix& scores, const Matrix& transition) {
  CrfResult out;
  out.log_partition = log_partition_forward(scores, transition);
  ViterbiResult v = viterbi_exact(scores, transition);
  out.best_path = std::move(v.path);
  out.best_path_score = v.score;
  return out;
}

}  // namespace strudec::crf
