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

#include "strudec/crf_approx.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "strudec/errors.h"
#include "strudec/ops.h"

namespace strudec::crf {
namespace {

Matrix gather(const Matrix& table, std::span<const int> ids) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), table.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= table.rows()) {
      throw ContractError("label id " + std::to_string(ids[i]) +
                          " out of range");
    }
    out.row(static_cast<Eigen::Index>(i)) = table.row(ids[i]);
  }
  return out;
}

void check_factors(const Matrix& e1, const Matrix& e2) {
  if (e1.rows() != e2.rows() || e1.cols() != e2.cols()) {
    throw ShapeError("transition embeddings E1 and E2 must have equal shapes");
  }
}

// Log-space forward-backward over a lattice.
struct LatticeStats {
  double log_z = 0.0;
  Matrix unary;                  // n x w
  std::vector<Matrix> pairwise;  // n-1 blocks w x w
};

Matrix lattice_alpha(const Matrix& emit, const std::vector<Matrix>& blocks) {
  const Eigen::Index n = emit.rows();
  const Eigen::Index w = emit.cols();
  Matrix alpha(n, w);
  alpha.row(0) = emit.row(0);
  for (Eigen::Index i = 1; i < n; ++i) {
    const Matrix& blk = blocks[i - 1];
    for (Eigen::Index b = 0; b < w; ++b) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index a = 0; a < w; ++a) {
        mx = std::max(mx, alpha(i - 1, a) + blk(a, b));
      }
      double s = 0.0;
      for (Eigen::Index a = 0; a < w; ++a) {
        s += std::exp(alpha(i - 1, a) + blk(a, b) - mx);
      }
      alpha(i, b) = mx + std::log(s) + emit(i, b);
    }
  }
  return alpha;
}

LatticeStats lattice_forward_backward(const Matrix& emit,
                                      const std::vector<Matrix>& blocks) {
  const Eigen::Index n = emit.rows();
  const Eigen::Index w = emit.cols();
  Matrix alpha = lattice_alpha(emit, blocks);
  Matrix beta = Matrix::Zero(n, w);
  for (Eigen::Index i = n - 2; i >= 0; --i) {
    const Matrix& blk = blocks[i];
    for (Eigen::Index a = 0; a < w; ++a) {
      double mx = -std::numeric_limits<double>::infinity();
      for (Eigen::Index b = 0; b < w; ++b) {
        mx = std::max(mx, blk(a, b) + emit(i + 1, b) + beta(i + 1, b));
      }
      double s = 0.0;
      for (Eigen::Index b = 0; b < w; ++b) {
        s += std::exp(blk(a, b) + emit(i + 1, b) + beta(i + 1, b) - mx);
      }
      beta(i, a) = mx + std::log(s);
    }
  }
  LatticeStats st;
  st.log_z = logsumexp(RowVector(alpha.row(n - 1)));
  st.unary = ((alpha + beta).array() - st.log_z).exp();
  st.pairwise.reserve(blocks.size());
  for (Eigen::Index i = 1; i < n; ++i) {
    const Matrix& blk = blocks[i - 1];
    Matrix p(w, w);
    for (Eigen::Index a = 0; a < w; ++a) {
      for (Eigen::Index b = 0; b < w; ++b) {
        p(a, b) = std::exp(alpha(i - 1, a) + blk(a, b) + emit(i, b) +
                           beta(i, b) - st.log_z);
      }
    }
    st.pairwise.push_back(std::move(p));
  }
  return st;
}

double lattice_path_score(const Matrix& emit, const std::vector<Matrix>& blocks,
                          std::span<const int> slots) {
  double s = emit(0, slots[0]);
  for (Eigen::Index i = 1; i < emit.rows(); ++i) {
    s += emit(i, slots[i]) + blocks[i - 1](slots[i - 1], slots[i]);
  }
  return s;
}

std::vector<int> locate_gold(const BeamLattice& lattice,
                             std::span<const int> gold) {
  if (static_cast<int>(gold.size()) != lattice.length) {
    throw ContractError("gold length differs from lattice length");
  }
  std::vector<int> slots(gold.size());
  for (int i = 0; i < lattice.length; ++i) {
    auto beam = lattice.beam(i);
    auto it = std::find(beam.begin(), beam.end(), gold[i]);
    if (it == beam.end()) {
      throw ContractError("gold label missing from beam at position " +
                          std::to_string(i));
    }
    slots[i] = static_cast<int>(it - beam.begin());
  }
  return slots;
}

}  // namespace

Matrix DynamicTransitionNet::apply(const RowVector& h_prev,
                                   const RowVector& h_cur) const {
  if (h_prev.size() + h_cur.size() != w1.rows()) {
    throw ShapeError("dynamic transition input must have 2*d_model entries");
  }
  const int dt2 = transition_dim * transition_dim;
  if (w2.cols() != dt2 || b2.cols() != dt2) {
    throw ShapeError("dynamic transition output must have d_t*d_t entries");
  }
  RowVector x(h_prev.size() + h_cur.size());
  x << h_prev, h_cur;
  RowVector hid = (x * w1 + b1).cwiseMax(0.0);
  RowVector out = hid * w2 + b2;
  return Eigen::Map<const Matrix>(out.data(), transition_dim, transition_dim);
}

Matrix static_transition_block(const Matrix& e1, const Matrix& e2,
                               std::span<const int> rows,
                               std::span<const int> cols) {
  check_factors(e1, e2);
  return gather(e1, rows) * gather(e2, cols).transpose();
}

Matrix dynamic_transition_block(const DynamicTransitionNet& net,
                                const Matrix& e1, const Matrix& e2,
                                const RowVector& h_prev,
                                const RowVector& h_cur,
                                std::span<const int> rows,
                                std::span<const int> cols) {
  check_factors(e1, e2);
  if (e1.cols() != net.transition_dim) {
    throw ShapeError("transition embedding width differs from d_t");
  }
  Matrix inner = net.apply(h_prev, h_cur);
  return gather(e1, rows) * inner * gather(e2, cols).transpose();
}

StaticTransitions::StaticTransitions(const Matrix& e1, const Matrix& e2)
    : e1_(e1), e2_(e2) {
  check_factors(e1, e2);
}

Matrix StaticTransitions::block(int, std::span<const int> rows,
                                std::span<const int> cols) const {
  return gather(e1_, rows) * gather(e2_, cols).transpose();
}

DynamicTransitions::DynamicTransitions(const DynamicTransitionNet& net,
                                       const Matrix& e1, const Matrix& e2,
                                       const Matrix& hidden)
    : e1_(e1), e2_(e2) {
  check_factors(e1, e2);
  if (e1.cols() != net.transition_dim) {
    throw ShapeError("transition embedding width differs from d_t");
  }
  for (Eigen::Index i = 1; i < hidden.rows(); ++i) {
    inner_.push_back(net.apply(hidden.row(i - 1), hidden.row(i)));
  }
}

Matrix DynamicTransitions::block(int i, std::span<const int> rows,
                                 std::span<const int> cols) const {
  if (i < 1 || i > static_cast<int>(inner_.size())) {
    throw ContractError("dynamic transition position out of range");
  }
  return gather(e1_, rows) * inner_[i - 1] * gather(e2_, cols).transpose();
}

DenseTransitions::DenseTransitions(Matrix m) { mats_.push_back(std::move(m)); }

DenseTransitions::DenseTransitions(std::vector<Matrix> per_pair)
    : mats_(std::move(per_pair)) {}

int DenseTransitions::vocab_size() const {
  return mats_.empty() ? 0 : static_cast<int>(mats_[0].rows());
}

Matrix DenseTransitions::block(int i, std::span<const int> rows,
                               std::span<const int> cols) const {
  const Matrix& m = mats_.size() == 1 ? mats_[0] : mats_.at(i - 1);
  Matrix out(static_cast<Eigen::Index>(rows.size()),
             static_cast<Eigen::Index>(cols.size()));
  for (std::size_t a = 0; a < rows.size(); ++a) {
    for (std::size_t b = 0; b < cols.size(); ++b) {
      out(a, b) = m(rows[a], cols[b]);
    }
  }
  return out;
}

BeamLattice select_beam(const Matrix& scores, int k,
                        std::optional<std::span<const int>> gold) {
  if (k < 1) throw ContractError("beam size must be at least 1");
  if (scores.rows() < 1 || scores.cols() < 1) {
    throw ShapeError("label scores need n >= 1 and V >= 1");
  }
  const int n = static_cast<int>(scores.rows());
  const int v = static_cast<int>(scores.cols());
  if (gold && static_cast<int>(gold->size()) != n) {
    throw ContractError("gold length differs from sequence length");
  }
  BeamLattice lat;
  lat.length = n;
  lat.width = std::min(k, v);
  lat.candidates.resize(static_cast<std::size_t>(n) * lat.width);
  lat.candidate_scores.resize(n, lat.width);
  if (gold) lat.gold_index.resize(n);

  // (-score, id) pairs: the natural order ranks higher scores first and
  // breaks ties toward the smaller id.
  std::vector<std::pair<double, int>> order(v);
  for (int i = 0; i < n; ++i) {
    for (int a = 0; a < v; ++a) order[a] = {-scores(i, a), a};
    // A heap scan rejects most labels with one comparison when the beam is
    // narrow; selection plus a short sort is cheaper for wide beams.
    if (lat.width * 32 <= v) {
      std::partial_sort(order.begin(), order.begin() + lat.width, order.end());
    } else {
      if (lat.width < v) {
        std::nth_element(order.begin(), order.begin() + lat.width,
                         order.end());
      }
      std::sort(order.begin(), order.begin() + lat.width);
    }
    int* row = lat.candidates.data() + static_cast<std::size_t>(i) * lat.width;
    for (int j = 0; j < lat.width; ++j) row[j] = order[j].second;
    if (gold) {
      const int g = (*gold)[i];
      if (g < 0 || g >= v) {
        throw ContractError("gold label " + std::to_string(g) +
                            " out of range");
      }
      int slot = -1;
      for (int j = 0; j < lat.width; ++j) {
        if (row[j] == g) slot = j;
      }
      if (slot < 0) {
        slot = lat.width - 1;
        row[slot] = g;
      }
      lat.gold_index[i] = slot;
    }
    for (int j = 0; j < lat.width; ++j) {
      lat.candidate_scores(i, j) = scores(i, row[j]);
    }
  }
  return lat;
}

BeamLattice build_beam(const Matrix& scores, int k,
                       std::optional<std::span<const int>> gold,
                       const TransitionSource& transitions) {
  if (transitions.vocab_size() != scores.cols()) {
    throw ShapeError("transition vocabulary differs from label scores");
  }
  BeamLattice lat = select_beam(scores, k, gold);
  lat.transition_blocks.reserve(lat.length > 0 ? lat.length - 1 : 0);
  for (int i = 1; i < lat.length; ++i) {
    lat.transition_blocks.push_back(
        transitions.block(i, lat.beam(i - 1), lat.beam(i)));
  }
  return lat;
}

double beam_log_partition(const BeamLattice& lattice) {
  Matrix alpha =
      lattice_alpha(lattice.candidate_scores, lattice.transition_blocks);
  return logsumexp(RowVector(alpha.row(alpha.rows() - 1)));
}

ViterbiResult beam_viterbi(const BeamLattice& lattice) {
  if (lattice.gold_forced()) {
    throw ContractError("beam_viterbi expects a lattice without gold forcing");
  }
  const int n = lattice.length;
  const int w = lattice.width;
  const Matrix& emit = lattice.candidate_scores;
  std::vector<double> delta(emit.row(0).data(), emit.row(0).data() + w);
  std::vector<double> next(w);
  std::vector<int> back(static_cast<std::size_t>(n) * w, 0);
  for (int i = 1; i < n; ++i) {
    const Matrix& blk = lattice.transition_blocks[i - 1];
    const int* prev_labels = lattice.beam(i - 1).data();
    int* bp = back.data() + static_cast<std::size_t>(i) * w;
    for (int b = 0; b < w; ++b) {
      int best_a = 0;
      double best = delta[0] + blk(0, b);
      for (int a = 1; a < w; ++a) {
        const double cand = delta[a] + blk(a, b);
        if (cand > best ||
            (cand == best && prev_labels[a] < prev_labels[best_a])) {
          best = cand;
          best_a = a;
        }
      }
      next[b] = best + emit(i, b);
      bp[b] = best_a;
    }
    delta.swap(next);
  }
  const int* last_labels = lattice.beam(n - 1).data();
  int last = 0;
  for (int b = 1; b < w; ++b) {
    if (delta[b] > delta[last] ||
        (delta[b] == delta[last] && last_labels[b] < last_labels[last])) {
      last = b;
    }
  }
  ViterbiResult out;
  out.score = delta[last];
  out.path.assign(n, 0);
  int slot = last;
  for (int i = n - 1; i >= 0; --i) {
    out.path[i] = lattice.label(i, slot);
    if (i > 0) slot = back[static_cast<std::size_t>(i) * w + slot];
  }
  return out;
}

double beam_gold_score(const BeamLattice& lattice) {
  if (!lattice.gold_forced()) {
    throw ContractError("lattice was built without gold forcing");
  }
  return lattice_path_score(lattice.candidate_scores,
                            lattice.transition_blocks, lattice.gold_index);
}

double crf_nll(const BeamLattice& lattice, std::span<const int> gold) {
  std::vector<int> slots = locate_gold(lattice, gold);
  return beam_log_partition(lattice) -
         lattice_path_score(lattice.candidate_scores,
                            lattice.transition_blocks, slots);
}

Var crf_nll(const Var& scores, const TransitionVars& tv,
            std::span<const int> gold, int k) {
  Tape& tape = *scores.tape();
  const Matrix& s = scores.value();
  const int n = static_cast<int>(s.rows());
  if (tv.e1.rows() != s.cols() || tv.e2.rows() != s.cols()) {
    throw ShapeError("transition embeddings must have V rows");
  }
  BeamLattice lat = select_beam(s, k, gold);
  const int w = lat.width;

  Var emit = ops::gather_per_row(scores, lat.candidates, w);

  const bool dynamic = tv.hidden.valid();
  Var inner_all;
  if (dynamic && n > 1) {
    const int d = tv.hidden.cols();
    Var pairs = ops::concat_cols({ops::slice_rows(tv.hidden, 0, n - 1),
                                  ops::slice_rows(tv.hidden, 1, n - 1)});
    if (pairs.cols() != 2 * d) throw ShapeError("bad hidden state shape");
    Var hid = ops::relu(ops::add_row(ops::matmul(pairs, tv.w1), tv.b1));
    inner_all = ops::add_row(ops::matmul(hid, tv.w2), tv.b2);
  }

  std::vector<Var> blocks;
  blocks.reserve(n > 0 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) {
    Var left = ops::gather_rows(tv.e1, lat.beam(i - 1));
    Var right = ops::gather_rows(tv.e2, lat.beam(i));
    if (dynamic) {
      Var inner = ops::reshape(ops::slice_rows(inner_all, i - 1, 1),
                               tv.transition_dim, tv.transition_dim);
      left = ops::matmul(left, inner);
    }
    blocks.push_back(ops::matmul_nt(left, right));
  }

  std::vector<Matrix> block_vals;
  block_vals.reserve(blocks.size());
  for (const Var& b : blocks) block_vals.push_back(b.value());
  const Matrix& emit_val = emit.value();
  LatticeStats st = lattice_forward_backward(emit_val, block_vals);
  const std::vector<int>& slots = lat.gold_index;
  Matrix out(1, 1);
  out(0, 0) = st.log_z - lattice_path_score(emit_val, block_vals, slots);

  std::vector<Var> parents;
  parents.reserve(blocks.size() + 1);
  parents.push_back(emit);
  parents.insert(parents.end(), blocks.begin(), blocks.end());

  return tape.record(
      std::move(out), parents,
      [emit, blocks = std::move(blocks), st = std::move(st), slots](
          Tape& t, const Matrix& g) {
        const double up = g(0, 0);
        Matrix d_emit = st.unary * up;
        for (std::size_t i = 0; i < slots.size(); ++i) {
          d_emit(static_cast<Eigen::Index>(i), slots[i]) -= up;
        }
        t.accumulate(emit, d_emit);
        for (std::size_t i = 0; i < blocks.size(); ++i) {
          if (!t.needs_grad(blocks[i])) continue;
          Matrix d_blk = st.pairwise[i] * up;
          d_blk(slots[i], slots[i + 1]) -= up;
          t.accumulate(blocks[i], d_blk);
        }
      });
}

}  // namespace strudec::crf
