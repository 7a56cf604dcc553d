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
#include <chrono>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <random>
#include <sstream>

#include "strudec/checkpoint.h"
#include "strudec/crf_approx.h"
#include "strudec/errors.h"
#include "strudec/ops.h"
#include "strudec/training.h"

namespace strudec {

void TrainConfig::validate() const {
  if (lambda < 0.0) throw ContractError("lambda must be non-negative");
  if (label_smoothing < 0.0 || label_smoothing >= 1.0) {
    throw ContractError("label smoothing must lie in [0, 1)");
  }
  if (beam < 1) throw ContractError("CRF beam must be at least 1");
  if (batch_size < 1 || max_steps < 0) {
    throw ContractError("batch size must be positive and steps non-negative");
  }
  if (learning_rate <= 0.0) throw ContractError("learning rate must be positive");
}

KeyValues TrainConfig::to_key_values() const {
  KeyValues kv;
  kv.set("lambda", lambda);
  kv.set("label_smoothing", label_smoothing);
  kv.set("learning_rate", learning_rate);
  kv.set("beta1", beta1);
  kv.set("beta2", beta2);
  kv.set("adam_eps", adam_eps);
  kv.set("batch_size", static_cast<long long>(batch_size));
  kv.set("max_steps", static_cast<long long>(max_steps));
  kv.set("warmup", warmup_checkpoint.string());
  kv.set("seed", std::to_string(seed));
  kv.set("crf_beam", static_cast<long long>(beam));
  kv.set("transition_dim", static_cast<long long>(transition_dim));
  kv.set("dynamic", static_cast<long long>(dynamic ? 1 : 0));
  return kv;
}

void warm_start(Seq2SeqModel& model, const std::filesystem::path& params_file) {
  auto stored = read_parameters(params_file);
  for (const auto& e : model.params().entries()) {
    if (!Seq2SeqModel::is_shared_parameter(e.name)) continue;
    auto it = stored.find(e.name);
    if (it == stored.end()) {
      throw RefusalError("warm-start checkpoint lacks parameter " + e.name);
    }
    Matrix& dst = e.tensor->data();
    if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols()) {
      throw RefusalError("warm-start shape mismatch for parameter " + e.name);
    }
    dst = it->second;
  }
}

PairLoss pair_loss(Tape& tape, const Seq2SeqModel& model,
                   const SentencePair& pair, const TrainConfig& cfg) {
  PairLoss out;
  Var ctx = model.encode(tape, pair.src);
  if (model.config().variant == Variant::kAutoregressiveTeacher) {
    std::vector<int> input{kEosId};
    input.insert(input.end(), pair.tgt.begin(), pair.tgt.end());
    std::vector<int> target(pair.tgt);
    target.push_back(kEosId);
    Var lp = model.teacher_log_probs(tape, ctx, input);
    out.nar = nar_loss(lp, target, cfg.label_smoothing);
    out.joint = out.nar;
    return out;
  }
  Var hidden = model.decode_hidden(tape, ctx, static_cast<int>(pair.tgt.size()));
  Var scores = model.label_scores(tape, hidden);
  out.nar = nar_loss(scores, pair.tgt, cfg.label_smoothing);
  if (!model.has_crf()) {
    out.joint = out.nar;
    return out;
  }
  out.crf = crf::crf_nll(scores, model.transition_vars(tape, hidden), pair.tgt,
                         cfg.beam);
  out.joint = joint_loss(out.crf, out.nar, cfg.lambda);
  return out;
}

std::vector<StepMetrics> train(Seq2SeqModel& model, const ParallelCorpus& data,
                               const TrainConfig& cfg,
                               const TrainHooks& hooks) {
  cfg.validate();
  if (data.empty()) throw ContractError("training corpus is empty");
  data.validate(model.config().max_len);

  Adam adam(AdamOptions{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_eps});
  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(data.size());
  std::size_t cursor = order.size();

  std::vector<StepMetrics> log;
  log.reserve(cfg.max_steps);
  for (int step = 1; step <= cfg.max_steps; ++step) {
    const auto t0 = std::chrono::steady_clock::now();
    Tape tape;
    std::vector<Var> joint_terms;
    double crf_sum = 0.0;
    double nar_sum = 0.0;
    for (int b = 0; b < cfg.batch_size; ++b) {
      if (cursor == order.size()) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::shuffle(order.begin(), order.end(), rng);
        cursor = 0;
      }
      PairLoss pl = pair_loss(tape, model, data.pairs[order[cursor++]], cfg);
      if (pl.crf.valid()) crf_sum += pl.crf.item();
      nar_sum += pl.nar.item();
      joint_terms.push_back(pl.joint);
    }
    const double inv = 1.0 / static_cast<double>(joint_terms.size());
    Var loss = ops::scale(ops::sum(ops::concat_rows(joint_terms)), inv);
    if (!std::isfinite(loss.item())) {
      throw DivergenceError("non-finite loss at step " + std::to_string(step));
    }
    tape.backward(loss);
    adam.step(model.params(), tape);

    StepMetrics m;
    m.step = step;
    m.crf_nll = crf_sum * inv;
    m.nar_loss = nar_sum * inv;
    m.joint_loss = loss.item();
    m.wall_ms = std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    log.push_back(m);
    if (hooks.on_step) hooks.on_step(m);
    if (hooks.on_checkpoint &&
        ((hooks.checkpoint_every > 0 && step % hooks.checkpoint_every == 0) ||
         step == cfg.max_steps)) {
      hooks.on_checkpoint(step);
    }
  }
  return log;
}

double evaluate_nar_loss(const Seq2SeqModel& model, const ParallelCorpus& data,
                         double eps) {
  if (data.empty()) throw ContractError("evaluation corpus is empty");
  double total = 0.0;
  for (const auto& pair : data.pairs) {
    Tape tape(false);
    Var ctx = model.encode(tape, pair.src);
    Var hidden =
        model.decode_hidden(tape, ctx, static_cast<int>(pair.tgt.size()));
    total += nar_loss(model.label_scores(tape, hidden), pair.tgt, eps).item();
  }
  return total / static_cast<double>(data.size());
}

std::string config_comment(const KeyValues& kv) {
  std::string s = "#";
  for (const auto& [k, v] : kv.values()) s += " " + k + "=" + v;
  return s;
}

MetricsCsv::MetricsCsv(const std::filesystem::path& path,
                       const KeyValues& config)
    : out_(path, std::ios::trunc) {
  if (!out_) throw DataError("cannot write " + path.string());
  out_ << config_comment(config) << "\n";
  out_ << "step,crf_nll,nar_loss,joint_loss,wall_ms\n";
}

void MetricsCsv::write(const StepMetrics& m) {
  std::ostringstream row;
  row << m.step << std::setprecision(17) << "," << m.crf_nll << ","
      << m.nar_loss << "," << m.joint_loss << std::setprecision(6) << ","
      << m.wall_ms << "\n";
  out_ << row.str();
  out_.flush();
}

}  // namespace strudec
