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

#include <iostream>

#include "CLI11.hpp"
#include "strudec/commands.h"
#include "strudec/errors.h"

namespace {

using namespace strudec;
namespace fs = std::filesystem;

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

void add_model_flags(CLI::App* cmd, ModelConfig& mc) {
  cmd->add_option("--layers", mc.num_layers, "Encoder and decoder layers");
  cmd->add_option("--d-model", mc.d_model, "Model width");
  cmd->add_option("--heads", mc.num_heads, "Attention heads");
  cmd->add_option("--d-ffn", mc.d_ffn, "Feed-forward width");
  cmd->add_option("--max-len", mc.max_len, "Longest sentence the model accepts");
}

void print_decode_summary(const cli::DecodeResult& r) {
  std::cout << "sentences=" << r.hypotheses.size() << " bleu=" << r.bleu;
  if (r.consistency) std::cout << " consistency=" << *r.consistency;
  std::cout << " lengths_per_sentence=" << r.lengths_per_sentence
            << " mean_ms=" << r.mean_ms << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-autoregressive translation with structured CRF decoding"};
  app.require_subcommand(1);

  // gen-task
  cli::GenTaskOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-task", "Write the synthetic multimodal task");
  gen_cmd->add_option("--out", gen.out_dir, "Output directory")->required();
  gen_cmd->add_option("--symbols", gen.spec.num_symbols, "Source alphabet size");
  gen_cmd->add_option("--synonyms", gen.spec.synonyms, "Phrases per symbol");
  gen_cmd->add_option("--min-phrase-len", gen.spec.min_phrase_len);
  gen_cmd->add_option("--max-phrase-len", gen.spec.max_phrase_len);
  gen_cmd->add_flag("--mixed-lengths", gen.spec.mixed_lengths,
                    "Let synonyms of one symbol differ in length");
  gen_cmd->add_option("--min-sentence-len", gen.spec.min_sentence_len);
  gen_cmd->add_option("--max-sentence-len", gen.spec.max_sentence_len);
  gen_cmd->add_option("--train-size", gen.spec.train_size);
  gen_cmd->add_option("--test-size", gen.spec.test_size);
  gen_cmd->add_option("--seed", gen.spec.seed);

  // train
  cli::TrainOptions tr;
  std::string decoder = "nar";
  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", tr.data_dir, "Task directory")->required()->check(CLI::ExistingDirectory);
  train_cmd->add_option("--out", tr.out_dir, "Checkpoint directory")->required();
  train_cmd->add_option("--decoder", decoder, "nar | crf | dcrf | teacher")
      ->check(CLI::IsMember({"nar", "crf", "dcrf", "teacher"}));
  train_cmd->add_option("--warmup", tr.warmup, "NAR checkpoint to warm-start from")->check(CLI::ExistingDirectory);
  train_cmd->add_option("--metrics", tr.metrics, "Metrics CSV (default <out>/metrics.csv)");
  train_cmd->add_option("--lambda", tr.train.lambda, "Weight of the NAR loss");
  train_cmd->add_option("--label-smoothing", tr.train.label_smoothing);
  train_cmd->add_option("--crf-beam", tr.train.beam, "Beam size k");
  train_cmd->add_option("--transition-dim", tr.train.transition_dim, "Transition embedding size d_t");
  train_cmd->add_option("--steps", tr.train.max_steps);
  train_cmd->add_option("--batch-size", tr.train.batch_size);
  train_cmd->add_option("--lr", tr.train.learning_rate);
  train_cmd->add_option("--seed", tr.train.seed);
  train_cmd->add_option("--checkpoint-every", tr.checkpoint_every);
  train_cmd->add_option("--log-every", tr.log_every);
  add_model_flags(train_cmd, tr.model);

  // decode
  cli::DecodeOptions dec;
  std::string mode = "nar";
  int length_bias = 0;
  auto* decode_cmd = app.add_subcommand("decode", "Decode a corpus split");
  decode_cmd->add_option("--checkpoint", dec.checkpoint)->required()->check(CLI::ExistingDirectory);
  decode_cmd->add_option("--data", dec.data_dir)->required()->check(CLI::ExistingDirectory);
  decode_cmd->add_option("--split", dec.split);
  decode_cmd->add_option("--out", dec.output, "Hypotheses, one per line");
  decode_cmd->add_option("--tsv", dec.tsv, "src, hyp, decode_score, rescore");
  decode_cmd->add_option("--mode", mode, "nar | crf | ar")
      ->check(CLI::IsMember({"nar", "crf", "ar"}));
  decode_cmd->add_option("--crf-beam", dec.beam);
  auto* bias_opt = decode_cmd->add_option("--length-bias", length_bias,
                                          "Length bias C (default: from training data)");
  decode_cmd->add_option("--half-width", dec.half_width, "Candidate half-width B");
  decode_cmd->add_option("--rescore", dec.rescore, "Teacher checkpoint")->check(CLI::ExistingDirectory);
  decode_cmd->add_flag("--reference-length", dec.reference_length,
                       "Center candidate lengths on the reference length");

  // sweep-beam
  cli::SweepOptions sw;
  auto* sweep_cmd = app.add_subcommand("sweep-beam", "Evaluate one CRF checkpoint over beam sizes");
  sweep_cmd->add_option("--checkpoint", sw.decode.checkpoint)->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--data", sw.decode.data_dir)->required()->check(CLI::ExistingDirectory);
  sweep_cmd->add_option("--split", sw.decode.split);
  sweep_cmd->add_option("--out", sw.output, "CSV")->required();
  sweep_cmd->add_option("--ks", sw.ks, "Beam sizes")->delimiter(',');
  sweep_cmd->add_flag("--reference-length", sw.decode.reference_length);

  // bench-latency
  cli::BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench-latency", "Per-sentence decoding latency, batch size 1");
  bench_cmd->add_option("--checkpoint", bench.checkpoint, "CRF checkpoint (default: random model)");
  bench_cmd->add_option("--teacher", bench.teacher, "Teacher checkpoint (default: random model)");
  bench_cmd->add_option("--out", bench.output, "CSV")->required();
  bench_cmd->add_option("--vocab-size", bench.vocab_size);
  bench_cmd->add_option("--lengths", bench.lengths)->delimiter(',');
  bench_cmd->add_option("--ks", bench.ks)->delimiter(',');
  bench_cmd->add_option("--runs", bench.runs);
  bench_cmd->add_option("--warmup-runs", bench.warmup_runs);
  bench_cmd->add_option("--sentences", bench.sentences);
  bench_cmd->add_option("--seed", bench.seed);
  add_model_flags(bench_cmd, bench.model);

  // eval
  cli::EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "BLEU and consistency of a hypotheses file");
  eval_cmd->add_option("--hyps", ev.hypotheses)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--data", ev.data_dir)->required()->check(CLI::ExistingDirectory);
  eval_cmd->add_option("--split", ev.split);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*gen_cmd) {
      cli::gen_task(gen);
    } else if (*train_cmd) {
      tr.decoder = cli::decoder_kind_from_string(decoder);
      const auto log = cli::train_command(tr);
      if (!log.empty()) {
        std::cout << "steps=" << log.back().step
                  << " joint=" << log.back().joint_loss << "\n";
      }
    } else if (*decode_cmd) {
      dec.mode = cli::decode_kind_from_string(mode);
      if (*bias_opt) dec.length_bias = length_bias;
      print_decode_summary(cli::decode_command(dec));
    } else if (*sweep_cmd) {
      for (const auto& r : cli::sweep_beam_command(sw)) {
        std::cout << "k=" << r.k << " bleu=" << r.bleu
                  << " consistency=" << r.consistency
                  << " mean_ms=" << r.mean_ms << "\n";
      }
    } else if (*bench_cmd) {
      for (const auto& r : cli::bench_latency_command(bench)) {
        std::cout << r.decoder << " n=" << r.n << " k=" << r.k
                  << " mean_ms=" << r.mean_ms << " std_ms=" << r.std_ms << "\n";
      }
    } else if (*eval_cmd) {
      const auto r = cli::eval_command(ev);
      std::cout << "bleu=" << r.bleu;
      if (r.consistency) std::cout << " consistency=" << *r.consistency;
      std::cout << "\n";
    }
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDivergence;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const RefusalError& e) {
    std::cerr << "refused: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return 0;
}
