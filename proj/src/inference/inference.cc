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

#include <algorithm>
#include <cmath>
#include <limits>

#include "strudec/crf_approx.h"
#include "strudec/errors.h"
#include "strudec/inference.h"
#include "strudec/tape.h"

namespace strudec {

void LengthRule::validate() const {
  if (half_width < 0) throw ContractError("half-width must be non-negative");
  if (max_len < 1) throw ContractError("max_len must be positive");
}

int predict_length(int source_len, const LengthRule& rule) {
  if (source_len < 1) throw ContractError("source length must be positive");
  return std::clamp(source_len + rule.bias, 1, rule.max_len);
}

std::vector<int> candidate_lengths(int source_len, const LengthRule& rule) {
  rule.validate();
  const int center = source_len + rule.bias;
  std::vector<int> out;
  for (int d = -rule.half_width; d <= rule.half_width; ++d) {
    const int len = std::clamp(center + d, 1, rule.max_len);
    if (out.empty() || out.back() != len) out.push_back(len);
  }
  return out;
}

int length_bias_from_corpus(const ParallelCorpus& corpus) {
  if (corpus.empty()) return 0;
  double diff = 0.0;
  for (const auto& p : corpus.pairs) {
    diff += static_cast<double>(p.tgt.size()) - static_cast<double>(p.src.size());
  }
  return static_cast<int>(std::lround(diff / static_cast<double>(corpus.size())));
}

namespace {

// First maximum, i.e. the smaller id on ties.
int argmax_row(const Matrix& m, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index j = 1; j < m.cols(); ++j) {
    if (m(row, j) > m(row, best)) best = j;
  }
  return static_cast<int>(best);
}

}  // namespace

std::vector<int> decode_nar(const Matrix& scores) {
  std::vector<int> out(static_cast<std::size_t>(scores.rows()));
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    out[static_cast<std::size_t>(i)] = argmax_row(scores, i);
  }
  return out;
}

namespace {

Candidate nar_candidate(const Matrix& scores) {
  Candidate c;
  c.tokens = decode_nar(scores);
  for (std::size_t i = 0; i < c.tokens.size(); ++i) {
    c.decode_score += scores(static_cast<Eigen::Index>(i), c.tokens[i]);
  }
  return c;
}

Candidate crf_candidate(const Seq2SeqModel& model, const Matrix& hidden,
                        const Matrix& scores, int beam) {
  auto transitions = model.transition_source(hidden);
  const crf::BeamLattice lattice =
      crf::build_beam(scores, beam, std::nullopt, *transitions);
  crf::ViterbiResult best = crf::beam_viterbi(lattice);
  return Candidate{std::move(best.path), best.score, std::nullopt};
}

Candidate decode_one(const Seq2SeqModel& model, Tape& tape, const Var& ctx,
                     int target_len, DecodeMode mode, int beam) {
  Var hidden = model.decode_hidden(tape, ctx, target_len);
  const Matrix& scores = model.label_scores(tape, hidden).value();
  if (mode == DecodeMode::kNar) return nar_candidate(scores);
  return crf_candidate(model, hidden.value(), scores, beam);
}

}  // namespace

Candidate decode_nar(const Seq2SeqModel& model, std::span<const int> src,
                     int target_len) {
  Tape tape(false);
  Var ctx = model.encode(tape, src);
  return decode_one(model, tape, ctx, target_len, DecodeMode::kNar, 0);
}

Candidate decode_crf(const Seq2SeqModel& model, std::span<const int> src,
                     int target_len, int beam) {
  if (!model.has_crf()) throw ContractError("model has no CRF head");
  if (beam < 1) throw ContractError("CRF beam must be at least 1");
  Tape tape(false);
  Var ctx = model.encode(tape, src);
  return decode_one(model, tape, ctx, target_len, DecodeMode::kCrf, beam);
}

std::vector<Candidate> decode_candidates(const Seq2SeqModel& model,
                                         std::span<const int> src,
                                         std::span<const int> lengths,
                                         DecodeMode mode, int beam) {
  if (mode == DecodeMode::kCrf && !model.has_crf()) {
    throw ContractError("model has no CRF head");
  }
  Tape tape(false);
  Var ctx = model.encode(tape, src);
  std::vector<Candidate> out;
  out.reserve(lengths.size());
  for (int len : lengths) {
    out.push_back(decode_one(model, tape, ctx, len, mode, beam));
  }
  return out;
}

Candidate rescore_select(const std::vector<Candidate>& candidates,
                         const Scorer& scorer) {
  if (candidates.empty()) throw ContractError("no candidates to rescore");
  std::size_t best = 0;
  double best_score = scorer(candidates[0].tokens);
  for (std::size_t i = 1; i < candidates.size(); ++i) {
    const double s = scorer(candidates[i].tokens);
    const auto& a = candidates[i].tokens;
    const auto& b = candidates[best].tokens;
    bool better = s > best_score;
    if (s == best_score) {
      better = a.size() < b.size() || (a.size() == b.size() && a < b);
    }
    if (better) {
      best = i;
      best_score = s;
    }
  }
  Candidate c = candidates[best];
  c.rescore = best_score;
  return c;
}

Scorer teacher_scorer(const Seq2SeqModel& teacher, std::span<const int> src) {
  std::vector<int> source(src.begin(), src.end());
  return [&teacher, source](std::span<const int> tokens) {
    std::vector<int> seq(tokens.begin(), tokens.end());
    seq.push_back(kEosId);
    return teacher.teacher_logprob(source, seq) /
           static_cast<double>(seq.size());
  };
}

std::vector<int> teacher_greedy(const Seq2SeqModel& teacher,
                                std::span<const int> src, int max_steps,
                                bool stop_at_eos) {
  Tape tape(false);
  Var ctx = teacher.encode(tape, src);
  std::vector<int> input{kEosId};
  std::vector<int> out;
  for (int step = 0; step < max_steps; ++step) {
    const Matrix& lp = teacher.teacher_log_probs(tape, ctx, input).value();
    int next = argmax_row(lp, lp.rows() - 1);
    if (next == kEosId) {
      if (stop_at_eos) break;
      // Benchmark mode: keep going with the best non-<eos> label.
      Matrix row = lp.row(lp.rows() - 1);
      row(0, kEosId) = -std::numeric_limits<double>::infinity();
      next = argmax_row(row, 0);
    }
    out.push_back(next);
    input.push_back(next);
  }
  return out;
}

}  // namespace strudec
