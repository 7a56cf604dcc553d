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

#include <cmath>

#include "strudec/errors.h"
#include "strudec/training.h"

namespace strudec {

void adam_step(Matrix& param, const Matrix& grad, AdamMoments& state,
               const AdamOptions& opt) {
  if (grad.rows() != param.rows() || grad.cols() != param.cols()) {
    throw ContractError("gradient shape differs from parameter shape");
  }
  if (state.steps == 0) {
    state.m = Matrix::Zero(param.rows(), param.cols());
    state.v = Matrix::Zero(param.rows(), param.cols());
  } else if (state.m.rows() != param.rows() || state.m.cols() != param.cols()) {
    throw ContractError("optimizer state shape differs from parameter shape");
  }
  ++state.steps;
  state.m = opt.beta1 * state.m + (1.0 - opt.beta1) * grad;
  state.v = opt.beta2 * state.v + (1.0 - opt.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(opt.beta1, static_cast<double>(state.steps));
  const double c2 = 1.0 - std::pow(opt.beta2, static_cast<double>(state.steps));
  param.array() -= opt.learning_rate * (state.m.array() / c1) /
                   ((state.v.array() / c2).sqrt() + opt.eps);
}

void Adam::step(ParameterSet& params, const Tape& tape) {
  for (const auto& e : params.entries()) {
    const Matrix* g = tape.grad(*e.tensor);
    if (g == nullptr) continue;
    adam_step(e.tensor->data(), *g, state_[e.tensor.get()], opt_);
  }
}

}  // namespace strudec
