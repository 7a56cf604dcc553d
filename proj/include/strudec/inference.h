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

#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "strudec/data.h"
#include "strudec/model.h"
#include "strudec/tensor.h"

namespace strudec {

// T' = clamp(T + bias, 1, max_len); candidates span T' - half_width through
// T' + half_width.
struct LengthRule {
  int bias = 0;
  int half_width = 0;
  int max_len = 64;

  void validate() const;
};

int predict_length(int source_len, const LengthRule& rule);

// Distinct clamped lengths in increasing order, at most 2B+1 of them.
std::vector<int> candidate_lengths(int source_len, const LengthRule& rule);

// round(mean(|tgt| - |src|)) over a corpus.
int length_bias_from_corpus(const ParallelCorpus& corpus);

struct Candidate {
  std::vector<int> tokens;
  double decode_score = 0.0;
  std::optional<double> rescore;
};

enum class DecodeMode { kNar, kCrf };

// Per-row argmax, ties to the smaller id.
std::vector<int> decode_nar(const Matrix& scores);

// decode_score is the sum of the selected label scores.
Candidate decode_nar(const Seq2SeqModel& model, std::span<const int> src,
                     int target_len);

// Beam Viterbi over the k best labels per position; decode_score is the path
// score within the lattice.
Candidate decode_crf(const Seq2SeqModel& model, std::span<const int> src,
                     int target_len, int beam);

// One candidate per length, sharing a single encoder pass.
std::vector<Candidate> decode_candidates(const Seq2SeqModel& model,
                                         std::span<const int> src,
                                         std::span<const int> lengths,
                                         DecodeMode mode, int beam);

using Scorer = std::function<double(std::span<const int>)>;

// Highest scorer value wins; ties go to the shorter candidate, then the
// lexicographically smaller one. Fills `rescore` on the returned candidate.
Candidate rescore_select(const std::vector<Candidate>& candidates,
                         const Scorer& scorer);

// Teacher log-probability of tokens + <eos>, divided by the number of scored
// tokens.
Scorer teacher_scorer(const Seq2SeqModel& teacher, std::span<const int> src);

// Greedy left-to-right decoding with the teacher, one decoder pass per step,
// stopping after max_steps tokens or, if `stop_at_eos`, at <eos>.
std::vector<int> teacher_greedy(const Seq2SeqModel& teacher,
                                std::span<const int> src, int max_steps,
                                bool stop_at_eos = true);

}  // namespace strudec
