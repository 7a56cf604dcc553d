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
#include <limits>

#include "common.h"
#include "doctest.h"
#include "strudec/checkpoint.h"
#include "strudec/errors.h"
#include "strudec/ops.h"
#include "strudec/tape.h"

using namespace strudec;
using testing::numeric_gradient;
using testing::random_matrix;
using testing::relative_error;

namespace {

using Builder = std::function<Var(Tape&, const std::vector<Var>&)>;

// Contracts the op output with fixed random weights so every output entry
// contributes to the scalar, then compares tape and numeric gradients.
double max_grad_error(const Builder& build, std::vector<Tensor>& inputs,
                      std::uint64_t seed = 11) {
  std::mt19937_64 rng(seed);
  Matrix weights;
  auto forward = [&](Tape& tape) {
    std::vector<Var> vars;
    for (auto& t : inputs) vars.push_back(tape.param(t));
    Var out = build(tape, vars);
    if (weights.size() == 0) {
      weights = random_matrix(out.rows(), out.cols(), rng);
    }
    return ops::sum(ops::hadamard(out, tape.constant(weights)));
  };
  Tape tape;
  Var loss = forward(tape);
  tape.backward(loss);
  double worst = 0.0;
  for (auto& t : inputs) {
    const Matrix* g = tape.grad(t);
    REQUIRE(g != nullptr);
    const Matrix analytic = *g;
    const Matrix numeric = numeric_gradient(
        [&] {
          Tape t2(false);
          return forward(t2).item();
        },
        t.data());
    worst = std::max(worst, relative_error(analytic, numeric));
  }
  return worst;
}

std::vector<Tensor> tensors(std::initializer_list<std::pair<int, int>> shapes,
                            std::uint64_t seed = 5) {
  std::mt19937_64 rng(seed);
  std::vector<Tensor> out;
  for (auto [r, c] : shapes) out.emplace_back(random_matrix(r, c, rng), true);
  return out;
}

}  // namespace

TEST_CASE("matmul matches a hand product") {
  Tape tape;
  Matrix a(2, 2);
  a << 1, 2, 3, 4;
  Matrix b(2, 2);
  b << 5, 6, 7, 8;
  Matrix expect(2, 2);
  expect << 19, 22, 43, 50;
  const Matrix got =
      ops::matmul(tape.constant(a), tape.constant(b)).value();
  CHECK(got == expect);
}

TEST_CASE("shape mismatches throw") {
  Tape tape;
  Var a = tape.constant(Matrix::Zero(2, 3));
  Var b = tape.constant(Matrix::Zero(2, 3));
  CHECK_THROWS_AS(ops::matmul(a, b), ShapeError);
  CHECK_THROWS_AS(ops::add(a, tape.constant(Matrix::Zero(3, 2))), ShapeError);
  CHECK_THROWS_AS(ops::reshape(a, 4, 2), ShapeError);
  CHECK_THROWS_AS(logsumexp(RowVector()), ShapeError);
}

TEST_CASE("backward needs a scalar") {
  Tape tape;
  Var a = tape.constant(Matrix::Ones(2, 2));
  CHECK_THROWS_AS(tape.backward(a), ContractError);
}

TEST_CASE("logsumexp and softmax are stable for large inputs") {
  RowVector v(3);
  v << 1000.0, 1000.0, 1000.0;
  CHECK(logsumexp(v) == doctest::Approx(1000.0 + std::log(3.0)));
  const RowVector p = softmax(v);
  CHECK(p.sum() == doctest::Approx(1.0));
  CHECK(p(0) == doctest::Approx(1.0 / 3.0));
}

TEST_CASE("a fully masked softmax row is refused") {
  Tape tape;
  Var a = tape.constant(Matrix::Zero(1, 2));
  Var m = ops::masked_fill(a, {true, true},
                           -std::numeric_limits<double>::infinity());
  CHECK_THROWS_AS(ops::softmax_rows(m), ContractError);
}

TEST_CASE("op gradients match central differences") {
  const double tol = 1e-6;
  SUBCASE("matmul") {
    auto in = tensors({{3, 4}, {4, 2}});
    CHECK(max_grad_error([](Tape&, auto& v) { return ops::matmul(v[0], v[1]); },
                         in) < tol);
  }
  SUBCASE("matmul_nt") {
    auto in = tensors({{3, 4}, {5, 4}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) { return ops::matmul_nt(v[0], v[1]); }, in) <
          tol);
  }
  SUBCASE("transpose, add, sub, scale, hadamard") {
    auto in = tensors({{3, 2}, {2, 3}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) {
                Var t = ops::transpose(v[1]);
                return ops::scale(
                    ops::sub(ops::hadamard(ops::add(v[0], t), v[0]), t), 1.5);
              },
              in) < tol);
  }
  SUBCASE("add_row and relu") {
    auto in = tensors({{4, 3}, {1, 3}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) { return ops::relu(ops::add_row(v[0], v[1])); },
              in) < tol);
  }
  SUBCASE("layer_norm") {
    auto in = tensors({{3, 5}, {1, 5}, {1, 5}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) { return ops::layer_norm(v[0], v[1], v[2]); },
              in) < tol);
  }
  SUBCASE("gather_rows with repeats") {
    auto in = tensors({{5, 3}});
    const std::vector<int> ids{4, 0, 4, 2};
    CHECK(max_grad_error(
              [&](Tape&, auto& v) { return ops::gather_rows(v[0], ids); }, in) <
          tol);
  }
  SUBCASE("gather_per_row and sum_entries") {
    auto in = tensors({{3, 6}});
    const std::vector<int> idx{5, 1, 0, 2, 2, 3};
    const std::vector<int> rows{0, 2, 2};
    const std::vector<int> cols{1, 4, 4};
    CHECK(max_grad_error(
              [&](Tape&, auto& v) {
                Var s = ops::sum_entries(v[0], rows, cols);
                return ops::concat_cols({ops::gather_per_row(v[0], idx, 2),
                                         ops::concat_rows({s, s, s})});
              },
              in) < tol);
  }
  SUBCASE("concat, slice, reshape") {
    auto in = tensors({{2, 3}, {2, 2}, {1, 5}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) {
                Var c = ops::concat_cols({v[0], v[1]});
                Var r = ops::concat_rows({c, v[2]});
                return ops::reshape(ops::slice_cols(ops::slice_rows(r, 1, 2), 1, 3),
                                    3, 2);
              },
              in) < tol);
  }
  SUBCASE("masked softmax and log_softmax") {
    auto in = tensors({{3, 4}});
    const std::vector<bool> mask{false, true, false, false,  //
                                 false, false, false, true,  //
                                 false, false, false, false};
    CHECK(max_grad_error(
              [&](Tape&, auto& v) {
                Var m = ops::masked_fill(
                    v[0], mask, -std::numeric_limits<double>::infinity());
                return ops::add(ops::softmax_rows(m),
                                ops::log_softmax_rows(v[0]));
              },
              in) < tol);
  }
  SUBCASE("sum, mean, logsumexp") {
    auto in = tensors({{3, 4}});
    CHECK(max_grad_error(
              [](Tape&, auto& v) {
                return ops::add(ops::add(ops::sum(v[0]), ops::mean(v[0])),
                                ops::logsumexp(v[0]));
              },
              in) < tol);
  }
}

TEST_CASE("a parameter used twice accumulates both paths") {
  Tensor w(Matrix::Constant(1, 1, 3.0), true);
  Tape tape;
  Var x = tape.param(w);
  Var y = tape.param(w);
  CHECK(x.id() == y.id());
  tape.backward(ops::sum(ops::hadamard(x, y)));
  CHECK((*tape.grad(w))(0, 0) == doctest::Approx(6.0));
}

TEST_CASE("an inference tape records no gradients") {
  Tensor w(Matrix::Ones(2, 2), true);
  Tape tape(false);
  Var loss = ops::sum(tape.param(w));
  tape.backward(loss);
  CHECK(tape.grad(w) == nullptr);
}

TEST_CASE("parameter files round-trip and refuse mismatches") {
  std::mt19937_64 rng(3);
  ParameterSet ps;
  ps.add("a", random_matrix(2, 3, rng));
  ps.add("b.c", random_matrix(1, 4, rng));
  CHECK_THROWS_AS(ps.add("a", Matrix::Zero(1, 1)), ContractError);
  CHECK(ps.num_elements() == 10);

  const auto path =
      std::filesystem::temp_directory_path() / "strudec_tensor_roundtrip.bin";
  save_parameters(ps, path);

  ParameterSet loaded;
  loaded.add("a", Matrix::Zero(2, 3));
  loaded.add("b.c", Matrix::Zero(1, 4));
  load_parameters(loaded, path);
  CHECK(loaded.at("a").data() == ps.at("a").data());
  CHECK(loaded.at("b.c").data() == ps.at("b.c").data());

  ParameterSet wrong_shape;
  wrong_shape.add("a", Matrix::Zero(3, 2));
  CHECK_THROWS_AS(load_parameters(wrong_shape, path), RefusalError);
  ParameterSet missing;
  missing.add("zzz", Matrix::Zero(1, 1));
  CHECK_THROWS_AS(load_parameters(missing, path), RefusalError);
  std::filesystem::remove(path);
}
