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

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "strudec/data.h"
#include "strudec/inference.h"
#include "strudec/keyvalue.h"
#include "strudec/model.h"
#include "strudec/training.h"

// Library side of the command-line tool. Every command takes a plain options
// struct so tests can drive the same code paths as the executable.
namespace strudec::cli {

// A checkpoint is a directory holding params.bin, model.cfg, vocab.txt and
// meta.cfg (training configuration plus the inference length bias).
struct Checkpoint {
  ModelConfig config;
  Vocab vocab;
  KeyValues meta;
  std::unique_ptr<Seq2SeqModel> model;
};

void save_checkpoint(const std::filesystem::path& dir,
                     const Seq2SeqModel& model, const Vocab& vocab,
                     const KeyValues& meta);
Checkpoint load_checkpoint(const std::filesystem::path& dir);

// Task directories hold {train,test}.{src,tgt}, task.cfg and grammar.txt.
std::filesystem::path split_file(const std::filesystem::path& dir,
                                 const std::string& split,
                                 const std::string& side);
std::filesystem::path grammar_file(const std::filesystem::path& dir);

struct GenTaskOptions {
  MultimodalTaskSpec spec;
  std::filesystem::path out_dir;
};
void gen_task(const GenTaskOptions& opt);

enum class DecoderKind { kNar, kCrf, kDcrf, kTeacher };
DecoderKind decoder_kind_from_string(const std::string& s);
std::string to_string(DecoderKind d);

struct TrainOptions {
  std::filesystem::path data_dir;
  std::filesystem::path out_dir;        // checkpoint directory
  std::filesystem::path metrics;        // CSV; empty: out_dir/metrics.csv
  std::filesystem::path warmup;         // NAR checkpoint directory, optional
  DecoderKind decoder = DecoderKind::kNar;
  ModelConfig model;                    // sizes; variant/crf follow decoder
  TrainConfig train;
  int checkpoint_every = 0;
  int log_every = 0;                    // progress lines on stderr
};
std::vector<StepMetrics> train_command(const TrainOptions& opt);

enum class DecodeKind { kNar, kCrf, kAr };
DecodeKind decode_kind_from_string(const std::string& s);

struct DecodeOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path data_dir;
  std::string split = "test";
  std::filesystem::path output;  // hypotheses, one per line; optional
  std::filesystem::path tsv;     // optional
  std::filesystem::path rescore;  // teacher checkpoint, optional
  DecodeKind mode = DecodeKind::kNar;
  int beam = 64;
  std::optional<int> length_bias;  // default: the checkpoint's
  int half_width = 0;
  // Decode at the reference target length instead of the length rule.
  bool reference_length = false;
};

struct DecodeResult {
  std::vector<Tokens> sources;
  std::vector<Tokens> references;
  std::vector<Candidate> outputs;
  std::vector<Tokens> hypotheses;
  double bleu = 0.0;
  std::optional<double> consistency;  // when the task has a grammar
  double mean_ms = 0.0;               // per-sentence decode wall time
  int lengths_per_sentence = 1;
};
DecodeResult decode_command(const DecodeOptions& opt);

struct SweepOptions {
  DecodeOptions decode;  // mode is forced to CRF
  std::filesystem::path output;
  std::vector<int> ks{1, 2, 4, 8, 16, 32, 64, 128, 256};
};
struct SweepRow {
  int k = 0;  // clamped to V
  double bleu = 0.0;
  double consistency = 0.0;
  double mean_ms = 0.0;
};
std::vector<SweepRow> sweep_beam_command(const SweepOptions& opt);

struct BenchOptions {
  std::filesystem::path checkpoint;  // CRF checkpoint; random model if empty
  std::filesystem::path teacher;     // AR checkpoint; random model if empty
  std::filesystem::path output;
  int vocab_size = 1024;             // random models only
  ModelConfig model;                 // random model sizes
  std::vector<int> lengths{16, 32};
  std::vector<int> ks{8, 16, 32, 64, 128};
  int runs = 5;
  int warmup_runs = 1;
  int sentences = 8;                 // per run
  std::uint64_t seed = 1;
};
struct BenchRow {
  std::string decoder;  // nar | crf | ar
  int n = 0;
  int k = 0;            // 0 when not applicable
  double mean_ms = 0.0;
  double std_ms = 0.0;
  // Structured-decoding part of the CRF decode (beam selection, transition
  // blocks, Viterbi); zero for other decoders.
  double crf_mean_ms = 0.0;
  double crf_std_ms = 0.0;
};
std::vector<BenchRow> bench_latency_command(const BenchOptions& opt);

// Least-squares slope of log(y) against log(x).
double fit_exponent(const std::vector<double>& x, const std::vector<double>& y);

struct EvalOptions {
  std::filesystem::path hypotheses;
  std::filesystem::path data_dir;
  std::string split = "test";
};
struct EvalResult {
  double bleu = 0.0;
  std::optional<double> consistency;
};
EvalResult eval_command(const EvalOptions& opt);

}  // namespace strudec::cli
