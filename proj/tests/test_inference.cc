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
#include <numeric>
#include <set>

#include "common.h"
#include "doctest.h"
#include "strudec/crf_exact.h"
#include "strudec/errors.h"
#include "strudec/inference.h"

using namespace strudec;
using namespace strudec::testing;

namespace {

ModelConfig micro(CrfHead crf) {
  ModelConfig c;
  c.num_layers = 1;
  c.d_model = 8;
  c.num_heads = 2;
  c.d_ffn = 16;
  c.vocab_size = 9;
  c.max_len = 10;
  c.transition_dim = 3;
  c.crf = crf;
  return c;
}

Matrix model_scores(const Seq2SeqModel& m, std::span<const int> src, int len,
                    Matrix* hidden = nullptr) {
  Tape tape(false);
  Var h = m.decode_hidden(tape, m.encode(tape, src), len);
  if (hidden != nullptr) *hidden = h.value();
  return m.label_scores(tape, h).value();
}

}  // namespace

TEST_CASE("length rule") {
  LengthRule r;
  r.max_len = 50;
  r.bias = 2;
  CHECK(predict_length(10, r) == 12);
  r.bias = 0;
  CHECK(predict_length(10, r) == 10);
  r.bias = -5;
  CHECK(predict_length(3, r) == 1);
  CHECK_THROWS_AS(predict_length(0, r), ContractError);

  r.bias = 0;
  r.half_width = 4;
  CHECK(candidate_lengths(20, r).size() == 9);
  CHECK(candidate_lengths(2, r) == std::vector<int>{1, 2, 3, 4, 5, 6});
  r.half_width = 0;
  CHECK(candidate_lengths(7, r) == std::vector<int>{7});
}

TEST_CASE("candidate lengths are unique, sorted and in range") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    LengthRule r;
    r.bias = random_int(rng, -10, 10);
    r.half_width = random_int(rng, 0, 9);
    r.max_len = random_int(rng, 1, 30);
    const auto lens = candidate_lengths(random_int(rng, 1, 30), r);
    CHECK(!lens.empty());
    CHECK(static_cast<int>(lens.size()) <= 2 * r.half_width + 1);
    CHECK(std::is_sorted(lens.begin(), lens.end()));
    CHECK(std::set<int>(lens.begin(), lens.end()).size() == lens.size());
    for (int l : lens) CHECK((l >= 1 && l <= r.max_len));
  }
}

TEST_CASE("length bias from a corpus is the rounded mean difference") {
  ParallelCorpus c;
  c.pairs = {{{3, 3}, {3, 3, 3}}, {{3}, {3, 3, 3}}, {{3, 3, 3}, {3, 3, 3}}};
  // differences 1, 2, 0 -> mean 1
  CHECK(length_bias_from_corpus(c) == 1);
}

TEST_CASE("parallel argmax decoding") {
  SUBCASE("one-hot rows") {
    Matrix s = Matrix::Zero(3, 4);
    s(0, 2) = s(1, 0) = s(2, 3) = 1.0;
    CHECK(decode_nar(s) == std::vector<int>{2, 0, 3});
  }
  SUBCASE("ties pick the smaller id") {
    CHECK(decode_nar(Matrix::Constant(2, 5, 0.3)) == std::vector<int>{0, 0});
  }
  SUBCASE("matches a full-sort oracle") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 50; ++t) {
      const Matrix s = random_matrix(4, 5, rng);
      const auto got = decode_nar(s);
      for (int i = 0; i < 4; ++i) {
        std::vector<int> ids(5);
        std::iota(ids.begin(), ids.end(), 0);
        std::stable_sort(ids.begin(), ids.end(),
                         [&](int a, int b) { return s(i, a) > s(i, b); });
        CHECK(got[i] == ids[0]);
      }
    }
  }
}

TEST_CASE("CRF decoding with k >= V equals exact Viterbi") {
  for (CrfHead head : {CrfHead::kStatic, CrfHead::kDynamic}) {
    Seq2SeqModel model(micro(head), 4);
    const std::vector<int> src{3, 5, 7, 4};
    Matrix hidden;
    const Matrix s = model_scores(model, src, 5, &hidden);
    const Matrix& e1 = model.params().at("crf.e1").data();
    const Matrix& e2 = model.params().at("crf.e2").data();
    crf::ViterbiResult exact;
    if (head == CrfHead::kStatic) {
      exact = crf::viterbi_exact(s, Matrix(e1 * e2.transpose()));
    } else {
      auto src_t = model.transition_source(hidden);
      const auto& dyn = dynamic_cast<const crf::DynamicTransitions&>(*src_t);
      std::vector<Matrix> mats;
      for (int i = 1; i < 5; ++i) {
        mats.push_back(e1 * dyn.inner(i) * e2.transpose());
      }
      exact = crf::viterbi_exact(s, mats);
    }
    for (int k : {9, 20}) {
      const Candidate c = decode_crf(model, src, 5, k);
      CHECK(c.tokens == exact.path);
      CHECK(c.decode_score == doctest::Approx(exact.score).epsilon(1e-12));
    }
    // Repeated calls are identical.
    CHECK(decode_crf(model, src, 5, 3).tokens ==
          decode_crf(model, src, 5, 3).tokens);
  }
}

TEST_CASE("zero transitions reduce CRF decoding to argmax") {
  Seq2SeqModel model(micro(CrfHead::kStatic), 5);
  model.params().at("crf.e1").data().setZero();
  const std::vector<int> src{6, 3, 4};
  for (int len : {1, 3, 6}) {
    CHECK(decode_crf(model, src, len, 9).tokens ==
          decode_nar(model, src, len).tokens);
  }
}

TEST_CASE("multi-length candidates share the encoder pass") {
  Seq2SeqModel model(micro(CrfHead::kStatic), 6);
  const std::vector<int> src{3, 4, 5};
  const std::vector<int> lengths{2, 3, 4};
  const auto nar = decode_candidates(model, src, lengths, DecodeMode::kNar, 4);
  const auto crf = decode_candidates(model, src, lengths, DecodeMode::kCrf, 4);
  REQUIRE(nar.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(nar[i].tokens == decode_nar(model, src, lengths[i]).tokens);
    CHECK(crf[i].tokens == decode_crf(model, src, lengths[i], 4).tokens);
  }
  Seq2SeqModel plain(micro(CrfHead::kNone), 6);
  CHECK_THROWS_AS(decode_crf(plain, src, 3, 4), ContractError);
}

TEST_CASE("rescoring selection") {
  const Candidate a{{3, 4, 5}, 0.0, std::nullopt};
  const Candidate b{{3, 4}, 0.0, std::nullopt};
  const Candidate c{{3, 3}, 0.0, std::nullopt};
  SUBCASE("single candidate") {
    const auto best = rescore_select({a}, [](auto) { return -1.0; });
    CHECK(best.tokens == a.tokens);
    CHECK(best.rescore == -1.0);
  }
  SUBCASE("constant scorer prefers shorter, then lexicographically smaller") {
    const auto best = rescore_select({a, b, c}, [](auto) { return 0.0; });
    CHECK(best.tokens == c.tokens);
  }
  SUBCASE("winner's score dominates every candidate") {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 100; ++t) {
      std::vector<Candidate> cands;
      std::vector<double> values;
      for (int i = 0; i < random_int(rng, 1, 6); ++i) {
        cands.push_back({random_labels(rng, random_int(rng, 1, 4), 4), 0.0,
                         std::nullopt});
      }
      auto scorer = [](std::span<const int> toks) {
        double s = 0.0;
        for (int x : toks) s += std::sin(1.0 + x) / toks.size();
        return s;
      };
      const auto best = rescore_select(cands, scorer);
      for (const auto& cand : cands) CHECK(*best.rescore >= scorer(cand.tokens));
    }
  }
  SUBCASE("empty list") {
    CHECK_THROWS_AS(rescore_select({}, [](auto) { return 0.0; }),
                    ContractError);
  }
}

TEST_CASE("teacher scorer normalizes the log-probability of tokens plus eos") {
  ModelConfig tc = micro(CrfHead::kNone);
  tc.variant = Variant::kAutoregressiveTeacher;
  Seq2SeqModel teacher(tc, 7);
  const std::vector<int> src{3, 4};
  const std::vector<int> hyp{5, 6};
  const std::vector<int> with_eos{5, 6, kEosId};
  CHECK(teacher_scorer(teacher, src)(hyp) ==
        doctest::Approx(teacher.teacher_logprob(src, with_eos) / 3.0));
}

TEST_CASE("greedy teacher decoding") {
  ModelConfig tc = micro(CrfHead::kNone);
  tc.variant = Variant::kAutoregressiveTeacher;
  Seq2SeqModel teacher(tc, 8);
  const std::vector<int> src{3, 4, 5};
  const auto forced = teacher_greedy(teacher, src, 7, false);
  CHECK(forced.size() == 7);
  CHECK(std::find(forced.begin(), forced.end(), kEosId) == forced.end());
  CHECK(teacher_greedy(teacher, src, 7).size() <= 7);
}
