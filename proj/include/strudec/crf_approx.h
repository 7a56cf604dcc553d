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

#include <optional>
#include <span>
#include <vector>

#include "strudec/crf_exact.h"
#include "strudec/tape.h"
#include "strudec/tensor.h"

// Scalable CRF for large label sets: transitions factor as E1 * E2^T (or
// E1 * D_i * E2^T with a position-dependent D_i), and the dynamic programs run
// over a per-position beam of the k highest-scoring labels.
namespace strudec::crf {

// Two-layer feed-forward net f: [h_prev, h_cur] -> d_t x d_t. References the
// caller's storage.
struct DynamicTransitionNet {
  const Matrix& w1;  // 2*d_model x hidden
  const Matrix& b1;  // 1 x hidden
  const Matrix& w2;  // hidden x d_t*d_t
  const Matrix& b2;  // 1 x d_t*d_t
  int transition_dim;

  // f([h_prev, h_cur]) reshaped row-major to d_t x d_t.
  Matrix apply(const RowVector& h_prev, const RowVector& h_cur) const;
};

// block(a, b) = <E1[rows[a]], E2[cols[b]]>, without forming the V x V matrix.
Matrix static_transition_block(const Matrix& e1, const Matrix& e2,
                               std::span<const int> rows,
                               std::span<const int> cols);

// block(a, b) = E1[rows[a]] * f([h_prev, h_cur]) * E2[cols[b]]^T.
Matrix dynamic_transition_block(const DynamicTransitionNet& net,
                                const Matrix& e1, const Matrix& e2,
                                const RowVector& h_prev,
                                const RowVector& h_cur,
                                std::span<const int> rows,
                                std::span<const int> cols);

// Source of cropped transition blocks for adjacent position pairs.
class TransitionSource {
 public:
  virtual ~TransitionSource() = default;
  virtual int vocab_size() const = 0;
  // Scores for the pair (i-1, i), i in [1, n): out(a, b) = t(rows[a], cols[b]).
  virtual Matrix block(int i, std::span<const int> rows,
                       std::span<const int> cols) const = 0;
};

class StaticTransitions final : public TransitionSource {
 public:
  StaticTransitions(const Matrix& e1, const Matrix& e2);
  int vocab_size() const override { return static_cast<int>(e1_.rows()); }
  Matrix block(int i, std::span<const int> rows,
               std::span<const int> cols) const override;

 private:
  const Matrix& e1_;
  const Matrix& e2_;
};

// Position-dependent transitions from decoder states `hidden` (n x d_model).
// The inner d_t x d_t matrices are computed once at construction.
class DynamicTransitions final : public TransitionSource {
 public:
  DynamicTransitions(const DynamicTransitionNet& net, const Matrix& e1,
                     const Matrix& e2, const Matrix& hidden);
  int vocab_size() const override { return static_cast<int>(e1_.rows()); }
  Matrix block(int i, std::span<const int> rows,
               std::span<const int> cols) const override;
  const Matrix& inner(int i) const { return inner_[i - 1]; }

 private:
  const Matrix& e1_;
  const Matrix& e2_;
  std::vector<Matrix> inner_;
};

// Explicit V x V matrices, either shared by all pairs or one per pair.
class DenseTransitions final : public TransitionSource {
 public:
  explicit DenseTransitions(Matrix m);
  explicit DenseTransitions(std::vector<Matrix> per_pair);
  int vocab_size() const override;
  Matrix block(int i, std::span<const int> rows,
               std::span<const int> cols) const override;

 private:
  std::vector<Matrix> mats_;
};

struct BeamLattice {
  int length = 0;
  int width = 0;                  // k_eff = min(k, V)
  std::vector<int> candidates;    // length x width label ids, row-major
  Matrix candidate_scores;        // length x width emission scores
  std::vector<Matrix> transition_blocks;  // length-1 blocks, width x width
  std::vector<int> gold_index;    // per-position beam slot of gold, if forced

  int label(int i, int j) const { return candidates[i * width + j]; }
  std::span<const int> beam(int i) const {
    return {candidates.data() + static_cast<std::size_t>(i) * width,
            static_cast<std::size_t>(width)};
  }
  bool gold_forced() const { return !gold_index.empty(); }
};

// Top-k candidate selection per position, ties toward the smaller id. With
// `gold`, a missing gold label replaces the lowest-ranked candidate.
// Transition blocks are left empty.
BeamLattice select_beam(const Matrix& scores, int k,
                        std::optional<std::span<const int>> gold = {});

// select_beam plus transition blocks from `transitions`.
BeamLattice build_beam(const Matrix& scores, int k,
                       std::optional<std::span<const int>> gold,
                       const TransitionSource& transitions);

// Forward recursion over the lattice, O(n k^2).
double beam_log_partition(const BeamLattice& lattice);

// Max-plus recursion over the lattice; returns label ids. Ties resolve to the
// smaller label id. Requires a lattice built without gold forcing.
ViterbiResult beam_viterbi(const BeamLattice& lattice);

// Score of the gold path through the lattice (emissions plus cropped
// transitions). Requires gold forcing.
double beam_gold_score(const BeamLattice& lattice);

// beam_log_partition - beam_gold_score.
double crf_nll(const BeamLattice& lattice, std::span<const int> gold);

// Differentiable parameters of the transition model on a tape.
struct TransitionVars {
  Var e1;  // V x d_t
  Var e2;  // V x d_t
  // Dynamic transitions are active when `hidden` is valid.
  Var hidden;  // n x d_model decoder states
  Var w1, b1, w2, b2;
  int transition_dim = 0;
};

// Beam-approximated CRF negative log-likelihood with gold forcing, recorded
// on the tape of `scores`. Gradients reach the emissions, E1, E2 and the
// dynamic net.
Var crf_nll(const Var& scores, const TransitionVars& transitions,
            std::span<const int> gold, int k);

}  // namespace strudec::crf
