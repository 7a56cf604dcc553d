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

#include <filesystem>
#include <fstream>
#include <limits>

#include "common.h"
#include "doctest.h"
#include "strudec/errors.h"
#include "strudec/training.h"

using namespace strudec;
using namespace strudec::testing;

namespace {

ModelConfig small_config(CrfHead crf) {
  ModelConfig c;
  c.num_layers = 1;
  c.d_model = 32;
  c.num_heads = 4;
  c.d_ffn = 64;
  c.vocab_size = 12;
  c.max_len = 8;
  c.transition_dim = 8;
  c.crf = crf;
  return c;
}

// 50 pairs over 9 ordinary tokens where the target copies the source.
ParallelCorpus copy_task(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ParallelCorpus c;
  for (int i = 0; i < 50; ++i) {
    std::vector<int> s(random_int(rng, 2, 5));
    for (int& t : s) t = random_int(rng, 3, 11);
    c.pairs.push_back({s, s});
  }
  return c;
}

Var scores_var(Tape& tape, std::initializer_list<double> row) {
  Matrix m(1, static_cast<Eigen::Index>(row.size()));
  int j = 0;
  for (double x : row) m(0, j++) = x;
  return tape.constant(m);
}

}  // namespace

TEST_CASE("NAR loss values") {
  Tape tape;
  const std::vector<int> gold0{0};
  SUBCASE("hand-computed smoothed cross-entropy") {
    // logits (1, 2, 3), gold 0, eps 0.1:
    // lse = 3 + ln(1 + e^-1 + e^-2) = 3.40760596444...
    // loss = lse - (0.9 * 1 + (0.1 / 3) * 6) = lse - 1.1
    Var s = scores_var(tape, {1.0, 2.0, 3.0});
    CHECK(nar_loss(s, gold0, 0.1).item() ==
          doctest::Approx(2.30760596444438).epsilon(1e-12));
  }
  SUBCASE("certain gold label costs nothing") {
    Var s = scores_var(tape, {1000.0, 0.0, 0.0});
    CHECK(nar_loss(s, gold0, 0.0).item() == doctest::Approx(0.0));
  }
  SUBCASE("uniform logits cost ln V") {
    Var s = tape.constant(Matrix::Zero(3, 5));
    const std::vector<int> gold{1, 4, 0};
    CHECK(nar_loss(s, gold, 0.0).item() == doctest::Approx(std::log(5.0)));
  }
  SUBCASE("length mismatch") {
    Var s = tape.constant(Matrix::Zero(3, 5));
    CHECK_THROWS_AS(nar_loss(s, gold0, 0.0), ContractError);
  }
}

TEST_CASE("joint loss is crf + lambda * nar, linear in lambda") {
  CHECK(joint_loss(2.0, 1.0, 0.5) == 2.5);
  CHECK(joint_loss(2.0, 1.0, 0.0) == 2.0);
  const double l0 = joint_loss(3.7, 1.3, 0.0);
  const double l5 = joint_loss(3.7, 1.3, 0.5);
  const double l1 = joint_loss(3.7, 1.3, 1.0);
  CHECK(l5 - l0 == doctest::Approx(l1 - l5));
}

TEST_CASE("Adam update") {
  AdamOptions opt;
  opt.learning_rate = 0.1;
  SUBCASE("hand-computed first step") {
    // m = 0.05, v = 0.00025; bias-corrected 0.5 and 0.25.
    Matrix p = Matrix::Constant(1, 1, 1.0);
    AdamMoments st;
    adam_step(p, Matrix::Constant(1, 1, 0.5), st, opt);
    CHECK(p(0, 0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-14));
    CHECK(st.steps == 1);
  }
  SUBCASE("zero gradient leaves parameters unchanged") {
    Matrix p = Matrix::Constant(2, 2, 0.7);
    AdamMoments st;
    for (int i = 0; i < 3; ++i) adam_step(p, Matrix::Zero(2, 2), st, opt);
    CHECK(p == Matrix::Constant(2, 2, 0.7));
  }
  SUBCASE("shape mismatch") {
    Matrix p = Matrix::Zero(2, 2);
    AdamMoments st;
    CHECK_THROWS_AS(adam_step(p, Matrix::Zero(1, 2), st, opt), ContractError);
  }
}

TEST_CASE("training configuration guards") {
  TrainConfig c;
  CHECK_NOTHROW(c.validate());
  c.lambda = -1.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.label_smoothing = 1.0;
  CHECK_THROWS_AS(c.validate(), ContractError);
  c = TrainConfig{};
  c.beam = 0;
  CHECK_THROWS_AS(c.validate(), ContractError);
}

TEST_CASE("copy task: 200 steps drive the joint loss below 0.5") {
  Seq2SeqModel model(small_config(CrfHead::kNone), 1);
  TrainConfig cfg;
  cfg.label_smoothing = 0.0;
  cfg.max_steps = 200;
  const auto log = train(model, copy_task(7), cfg);
  REQUIRE(log.size() == 200);
  CHECK(log.back().joint_loss < 0.5);

  // Window-20 means decrease across the run.
  std::vector<double> windows;
  for (int w = 0; w < 10; ++w) {
    double s = 0.0;
    for (int i = 0; i < 20; ++i) s += log[w * 20 + i].joint_loss;
    windows.push_back(s / 20.0);
  }
  for (std::size_t w = 1; w < windows.size(); ++w) {
    CHECK(windows[w] < windows[w - 1]);
  }
}

TEST_CASE("CRF-only training (lambda = 0) runs") {
  Seq2SeqModel model(small_config(CrfHead::kStatic), 2);
  TrainConfig cfg;
  cfg.lambda = 0.0;
  cfg.beam = 4;
  cfg.max_steps = 30;
  const auto log = train(model, copy_task(8), cfg);
  CHECK(log.back().joint_loss == doctest::Approx(log.back().crf_nll));
  CHECK(log.back().crf_nll < log.front().crf_nll);
}

TEST_CASE("identical seeds give identical loss curves and parameters") {
  TrainConfig cfg;
  cfg.beam = 5;
  cfg.max_steps = 15;
  Seq2SeqModel a(small_config(CrfHead::kDynamic), 3);
  Seq2SeqModel b(small_config(CrfHead::kDynamic), 3);
  const auto la = train(a, copy_task(9), cfg);
  const auto lb = train(b, copy_task(9), cfg);
  for (std::size_t i = 0; i < la.size(); ++i) {
    CHECK(la[i].joint_loss == lb[i].joint_loss);
    CHECK(la[i].crf_nll == lb[i].crf_nll);
  }
  for (std::size_t i = 0; i < a.params().size(); ++i) {
    CHECK(a.params().entries()[i].tensor->data() ==
          b.params().entries()[i].tensor->data());
  }
}

TEST_CASE("a non-finite loss aborts with DivergenceError") {
  Seq2SeqModel model(small_config(CrfHead::kNone), 4);
  model.params().at("out.b").data()(0, 3) =
      std::numeric_limits<double>::quiet_NaN();
  TrainConfig cfg;
  cfg.max_steps = 3;
  CHECK_THROWS_AS(train(model, copy_task(1), cfg), DivergenceError);
}

TEST_CASE("warm start copies the shared subset and preserves the NAR loss") {
  const auto dir = std::filesystem::temp_directory_path();
  const auto path = dir / "strudec_warm.bin";
  const ParallelCorpus data = copy_task(10);
  Seq2SeqModel nar(small_config(CrfHead::kNone), 5);
  TrainConfig cfg;
  cfg.max_steps = 20;
  train(nar, data, cfg);
  nar.save(path);

  Seq2SeqModel crf_model(small_config(CrfHead::kDynamic), 6);
  const Seq2SeqModel fresh(small_config(CrfHead::kDynamic), 6);
  warm_start(crf_model, path);
  for (const auto& e : crf_model.params().entries()) {
    if (Seq2SeqModel::is_shared_parameter(e.name)) {
      CHECK(e.tensor->data() == nar.params().at(e.name).data());
    } else {
      CHECK(e.tensor->data() == fresh.params().at(e.name).data());
    }
  }
  CHECK(std::abs(evaluate_nar_loss(crf_model, data, 0.1) -
                 evaluate_nar_loss(nar, data, 0.1)) < 1e-6);

  ModelConfig wider = small_config(CrfHead::kStatic);
  wider.d_ffn = 48;
  Seq2SeqModel mismatched(wider, 7);
  try {
    warm_start(mismatched, path);
    FAIL("expected a refusal");
  } catch (const RefusalError& e) {
    CHECK(std::string(e.what()).find("ffn") != std::string::npos);
  }
  std::filesystem::remove(path);
}

TEST_CASE("metrics CSV carries a config comment and a header") {
  const auto path =
      std::filesystem::temp_directory_path() / "strudec_metrics.csv";
  TrainConfig cfg;
  {
    MetricsCsv csv(path, cfg.to_key_values());
    csv.write({1, 2.0, 1.0, 2.5, 3.0});
  }
  std::ifstream in(path);
  std::string comment, header, row;
  std::getline(in, comment);
  std::getline(in, header);
  std::getline(in, row);
  CHECK(comment.rfind("# ", 0) == 0);
  CHECK(comment.find("lambda=0.5") != std::string::npos);
  CHECK(header == "step,crf_nll,nar_loss,joint_loss,wall_ms");
  CHECK(row.rfind("1,2,1,2.5,", 0) == 0);
  std::filesystem::remove(path);
}
