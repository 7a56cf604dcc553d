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

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "strudec/data.h"
#include "strudec/model.h"
#include "strudec/tape.h"

namespace strudec {

struct TrainConfig {
  double lambda = 0.5;
  double label_smoothing = 0.1;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  int batch_size = 16;
  int max_steps = 1000;
  std::filesystem::path warmup_checkpoint;  // empty: train from scratch
  std::uint64_t seed = 1;
  int beam = 64;
  int transition_dim = 32;
  bool dynamic = false;

  void validate() const;
  KeyValues to_key_values() const;
};

// Mean over positions of label-smoothed cross-entropy: the target puts
// 1 - eps on the gold label and eps spread uniformly over all V labels.
Var nar_loss(const Var& scores, std::span<const int> gold, double eps);

// crf + lambda * nar
Var joint_loss(const Var& crf_nll, const Var& nar, double lambda);
double joint_loss(double crf_nll, double nar, double lambda);

struct AdamOptions {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Matrix m;
  Matrix v;
  long long steps = 0;
};

// One bias-corrected Adam update of `param` in place.
void adam_step(Matrix& param, const Matrix& grad, AdamMoments& state,
               const AdamOptions& opt);

// Adam over a parameter set; parameters the tape did not reach are skipped.
class Adam {
 public:
  explicit Adam(AdamOptions opt) : opt_(opt) {}
  void step(ParameterSet& params, const Tape& tape);

 private:
  AdamOptions opt_;
  std::unordered_map<const Tensor*, AdamMoments> state_;
};

// Copies encoder, decoder and label-projection parameters from a plain
// non-autoregressive checkpoint; the CRF head keeps its fresh initialization.
// Throws RefusalError naming the first missing or mis-shaped parameter.
void warm_start(Seq2SeqModel& model, const std::filesystem::path& params_file);

struct StepMetrics {
  int step = 0;
  double crf_nll = 0.0;
  double nar_loss = 0.0;
  double joint_loss = 0.0;
  double wall_ms = 0.0;
};

// Per-sentence losses of one training pair.
struct PairLoss {
  Var crf;  // invalid when the model has no CRF head
  Var nar;
  Var joint;
};

PairLoss pair_loss(Tape& tape, const Seq2SeqModel& model,
                   const SentencePair& pair, const TrainConfig& cfg);

struct TrainHooks {
  // Called after every step.
  std::function<void(const StepMetrics&)> on_step;
  // Called every `checkpoint_every` steps and after the final step.
  std::function<void(int step)> on_checkpoint;
  int checkpoint_every = 0;
};

// Runs max_steps of batch -> forward -> joint loss -> backward -> Adam.
// Batches are drawn from a per-epoch shuffle seeded by cfg.seed. A non-finite
// loss throws DivergenceError.
std::vector<StepMetrics> train(Seq2SeqModel& model, const ParallelCorpus& data,
                               const TrainConfig& cfg,
                               const TrainHooks& hooks = {});

// Mean NAR loss (no gradient) over a corpus, as used to verify warm starts.
double evaluate_nar_loss(const Seq2SeqModel& model, const ParallelCorpus& data,
                         double eps);

// CSV with columns step,crf_nll,nar_loss,joint_loss,wall_ms preceded by a
// '# ' comment row carrying the configuration.
class MetricsCsv {
 public:
  MetricsCsv(const std::filesystem::path& path, const KeyValues& config);
  void write(const StepMetrics& m);

 private:
  std::ofstream out_;
};

// '# key=value key=value ...' on one line.
std::string config_comment(const KeyValues& kv);

}  // namespace strudec
