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

#include <chrono>
#include <cstdio>
#include <iostream>
#include <sstream>

#include "strudec/commands.h"
#include "strudec/errors.h"

namespace strudec::cli {
namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) {
    throw DataError("cannot create directory " + dir.string());
  }
}

void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) throw DataError("missing file " + p.string());
}

ParallelText read_split(const fs::path& dir, const std::string& split) {
  return read_parallel_text(split_file(dir, split, "src"),
                            split_file(dir, split, "tgt"), TokenMode::kWord);
}

Vocab task_vocab(const ParallelText& train) {
  std::vector<Tokens> sentences = train.src;
  sentences.insert(sentences.end(), train.tgt.begin(), train.tgt.end());
  return Vocab::build(sentences);
}

std::optional<MultimodalGrammar> maybe_grammar(const fs::path& data_dir) {
  const fs::path g = grammar_file(data_dir);
  if (!fs::is_regular_file(g)) return std::nullopt;
  return read_grammar(g);
}

// Refuses sources with tokens the checkpoint has never seen.
std::vector<std::vector<int>> encode_sources(const std::vector<Tokens>& src,
                                             const Vocab& vocab) {
  std::vector<std::vector<int>> out;
  out.reserve(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    for (const auto& tok : src[i]) {
      if (!vocab.contains(tok)) {
        throw RefusalError("token '" + tok + "' on line " +
                           std::to_string(i + 1) +
                           " is not in the checkpoint vocabulary");
      }
    }
    out.push_back(vocab.encode(src[i]));
  }
  return out;
}

}  // namespace

fs::path split_file(const fs::path& dir, const std::string& split,
                    const std::string& side) {
  return dir / (split + "." + side);
}

fs::path grammar_file(const fs::path& dir) { return dir / "grammar.txt"; }

void save_checkpoint(const fs::path& dir, const Seq2SeqModel& model,
                     const Vocab& vocab, const KeyValues& meta) {
  ensure_dir(dir);
  model.save(dir / "params.bin");
  model.config().to_key_values().write(dir / "model.cfg");
  vocab.save(dir / "vocab.txt");
  meta.write(dir / "meta.cfg");
}

Checkpoint load_checkpoint(const fs::path& dir) {
  for (const char* f : {"params.bin", "model.cfg", "vocab.txt"}) {
    require_file(dir / f);
  }
  Checkpoint c;
  c.config = ModelConfig::from_key_values(KeyValues::read(dir / "model.cfg"));
  c.vocab = Vocab::load(dir / "vocab.txt");
  if (c.vocab.size() != c.config.vocab_size) {
    throw RefusalError("vocabulary size of " + dir.string() +
                       " disagrees with its model config");
  }
  if (fs::is_regular_file(dir / "meta.cfg")) {
    c.meta = KeyValues::read(dir / "meta.cfg");
  }
  c.model = std::make_unique<Seq2SeqModel>(c.config, 0);
  c.model->load(dir / "params.bin");
  return c;
}

void gen_task(const GenTaskOptions& opt) {
  opt.spec.validate();
  ensure_dir(opt.out_dir);
  const MultimodalData data = gen_multimodal(opt.spec);
  write_parallel_text(data.train, split_file(opt.out_dir, "train", "src"),
                      split_file(opt.out_dir, "train", "tgt"));
  write_parallel_text(data.test, split_file(opt.out_dir, "test", "src"),
                      split_file(opt.out_dir, "test", "tgt"));
  write_grammar(data.grammar, grammar_file(opt.out_dir));
  opt.spec.to_key_values().write(opt.out_dir / "task.cfg");
}

DecoderKind decoder_kind_from_string(const std::string& s) {
  if (s == "nar") return DecoderKind::kNar;
  if (s == "crf") return DecoderKind::kCrf;
  if (s == "dcrf") return DecoderKind::kDcrf;
  if (s == "teacher") return DecoderKind::kTeacher;
  throw ContractError("unknown decoder: " + s);
}

std::string to_string(DecoderKind d) {
  switch (d) {
    case DecoderKind::kNar: return "nar";
    case DecoderKind::kCrf: return "crf";
    case DecoderKind::kDcrf: return "dcrf";
    case DecoderKind::kTeacher: return "teacher";
  }
  return "?";
}

std::vector<StepMetrics> train_command(const TrainOptions& opt) {
  const ParallelText text = read_split(opt.data_dir, "train");
  Vocab vocab = task_vocab(text);

  ModelConfig mc = opt.model;
  mc.vocab_size = vocab.size();
  mc.transition_dim = opt.train.transition_dim;
  mc.variant = opt.decoder == DecoderKind::kTeacher
                   ? Variant::kAutoregressiveTeacher
                   : Variant::kNonAutoregressive;
  mc.crf = opt.decoder == DecoderKind::kCrf    ? CrfHead::kStatic
           : opt.decoder == DecoderKind::kDcrf ? CrfHead::kDynamic
                                               : CrfHead::kNone;
  TrainConfig tc = opt.train;
  tc.dynamic = opt.decoder == DecoderKind::kDcrf;
  tc.warmup_checkpoint = opt.warmup;
  tc.validate();

  const ParallelCorpus corpus = encode_corpus(text, vocab);
  Seq2SeqModel model(mc, tc.seed);
  if (!opt.warmup.empty()) {
    require_file(opt.warmup / "params.bin");
    if (!(Vocab::load(opt.warmup / "vocab.txt") == vocab)) {
      throw RefusalError("warm-start checkpoint vocabulary differs from the "
                         "training corpus vocabulary");
    }
    warm_start(model, opt.warmup / "params.bin");
  }

  KeyValues meta = tc.to_key_values();
  meta.set("decoder", to_string(opt.decoder));
  meta.set("length_bias",
           static_cast<long long>(length_bias_from_corpus(corpus)));
  KeyValues header = meta;
  const KeyValues model_kv = mc.to_key_values();
  for (const auto& [k, v] : model_kv.values()) header.set(k, v);

  const fs::path metrics =
      opt.metrics.empty() ? opt.out_dir / "metrics.csv" : opt.metrics;
  ensure_dir(opt.out_dir);
  MetricsCsv csv(metrics, header);

  TrainHooks hooks;
  hooks.on_step = [&](const StepMetrics& m) {
    csv.write(m);
    if (opt.log_every > 0 && m.step % opt.log_every == 0) {
      std::cerr << to_string(opt.decoder) << " step " << m.step
                << " joint=" << m.joint_loss << " nar=" << m.nar_loss
                << " crf=" << m.crf_nll << "\n";
    }
  };
  hooks.checkpoint_every = opt.checkpoint_every;
  hooks.on_checkpoint = [&](int) {
    save_checkpoint(opt.out_dir, model, vocab, meta);
  };
  auto log = train(model, corpus, tc, hooks);
  if (tc.max_steps == 0) save_checkpoint(opt.out_dir, model, vocab, meta);
  return log;
}

DecodeKind decode_kind_from_string(const std::string& s) {
  if (s == "nar") return DecodeKind::kNar;
  if (s == "crf") return DecodeKind::kCrf;
  if (s == "ar") return DecodeKind::kAr;
  throw ContractError("unknown decode mode: " + s);
}

DecodeResult decode_command(const DecodeOptions& opt) {
  const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
  const Seq2SeqModel& model = *ckpt.model;
  const ParallelText text = read_split(opt.data_dir, opt.split);
  const auto sources = encode_sources(text.src, ckpt.vocab);

  std::optional<Checkpoint> teacher;
  if (!opt.rescore.empty()) {
    teacher = load_checkpoint(opt.rescore);
    if (!(teacher->vocab == ckpt.vocab)) {
      throw RefusalError("teacher vocabulary differs from the model's");
    }
    if (teacher->config.variant != Variant::kAutoregressiveTeacher) {
      throw RefusalError(opt.rescore.string() + " is not a teacher checkpoint");
    }
  }
  if (opt.mode == DecodeKind::kCrf && !model.has_crf()) {
    throw RefusalError("checkpoint has no CRF head; use --mode nar");
  }
  if (opt.mode == DecodeKind::kAr &&
      model.config().variant != Variant::kAutoregressiveTeacher) {
    throw RefusalError("--mode ar needs a teacher checkpoint");
  }

  LengthRule rule;
  rule.bias = opt.length_bias.value_or(
      static_cast<int>(ckpt.meta.get_int("length_bias", 0)));
  rule.half_width = opt.half_width;
  rule.max_len = model.config().max_len;
  rule.validate();

  DecodeResult res;
  res.sources = text.src;
  res.references = text.tgt;
  double total_ms = 0.0;
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& src = sources[i];
    const auto t0 = std::chrono::steady_clock::now();
    Candidate best;
    if (opt.mode == DecodeKind::kAr) {
      best.tokens = teacher_greedy(model, src, model.config().max_len);
    } else {
      std::vector<int> lengths;
      if (opt.reference_length) {
        const int ref = static_cast<int>(text.tgt[i].size());
        LengthRule centered = rule;
        centered.bias = 0;
        lengths = candidate_lengths(ref, centered);
      } else {
        lengths = candidate_lengths(static_cast<int>(src.size()), rule);
      }
      res.lengths_per_sentence = static_cast<int>(lengths.size());
      const auto mode =
          opt.mode == DecodeKind::kCrf ? DecodeMode::kCrf : DecodeMode::kNar;
      auto cands = decode_candidates(model, src, lengths, mode, opt.beam);
      if (teacher) {
        best = rescore_select(cands, teacher_scorer(*teacher->model, src));
      } else if (cands.size() == 1) {
        best = std::move(cands.front());
      } else {
        // Without a teacher, keep the candidate at the central length.
        const int center =
            opt.reference_length
                ? static_cast<int>(text.tgt[i].size())
                : predict_length(static_cast<int>(src.size()), rule);
        for (auto& c : cands) {
          if (static_cast<int>(c.tokens.size()) == center) best = std::move(c);
        }
      }
    }
    total_ms += std::chrono::duration<double, std::milli>(
                    std::chrono::steady_clock::now() - t0)
                    .count();
    res.hypotheses.push_back(ckpt.vocab.decode(best.tokens));
    res.outputs.push_back(std::move(best));
  }
  res.mean_ms = sources.empty() ? 0.0 : total_ms / sources.size();
  res.bleu = bleu(res.hypotheses, res.references);
  if (auto g = maybe_grammar(opt.data_dir); g && !res.hypotheses.empty()) {
    res.consistency = consistency_rate(*g, res.sources, res.hypotheses);
  }

  if (!opt.output.empty()) {
    std::vector<std::string> lines;
    for (const auto& h : res.hypotheses) {
      lines.push_back(detokenize(h, TokenMode::kWord));
    }
    write_lines(opt.output, lines);
  }
  if (!opt.tsv.empty()) {
    std::vector<std::string> lines{"src\thyp\tdecode_score\trescore"};
    for (std::size_t i = 0; i < res.outputs.size(); ++i) {
      const auto& c = res.outputs[i];
      lines.push_back(detokenize(res.sources[i], TokenMode::kWord) + "\t" +
                      detokenize(res.hypotheses[i], TokenMode::kWord) + "\t" +
                      format_double(c.decode_score) + "\t" +
                      (c.rescore ? format_double(*c.rescore) : ""));
    }
    write_lines(opt.tsv, lines);
  }
  return res;
}

std::vector<SweepRow> sweep_beam_command(const SweepOptions& opt) {
  DecodeOptions dec = opt.decode;
  dec.mode = DecodeKind::kCrf;
  dec.output.clear();
  dec.tsv.clear();
  const ModelConfig mc =
      ModelConfig::from_key_values(KeyValues::read(dec.checkpoint / "model.cfg"));

  std::vector<SweepRow> rows;
  for (int k : opt.ks) {
    if (k < 1) throw ContractError("beam sizes must be positive");
    dec.beam = std::min(k, mc.vocab_size);
    if (!rows.empty() && rows.back().k == dec.beam) continue;
    const DecodeResult r = decode_command(dec);
    rows.push_back({dec.beam, r.bleu, r.consistency.value_or(0.0), r.mean_ms});
  }

  if (!opt.output.empty()) {
    KeyValues cfg;
    cfg.set("command", "sweep-beam");
    cfg.set("checkpoint", dec.checkpoint.string());
    cfg.set("data", dec.data_dir.string());
    cfg.set("split", dec.split);
    cfg.set("reference_length", static_cast<long long>(dec.reference_length));
    cfg.set("half_width", static_cast<long long>(dec.half_width));
    std::vector<std::string> lines{config_comment(cfg),
                                   "k,bleu,consistency,mean_ms"};
    for (const auto& r : rows) {
      std::ostringstream os;
      os << r.k << "," << format_double(r.bleu) << ","
         << format_double(r.consistency) << "," << r.mean_ms;
      lines.push_back(os.str());
    }
    write_lines(opt.output, lines);
  }
  return rows;
}

EvalResult eval_command(const EvalOptions& opt) {
  const ParallelText text = read_split(opt.data_dir, opt.split);
  std::vector<Tokens> hyps;
  for (const auto& line : read_lines(opt.hypotheses)) {
    hyps.push_back(tokenize(line, TokenMode::kWord));
  }
  if (hyps.size() != text.size()) {
    throw DataError("hypothesis count " + std::to_string(hyps.size()) +
                    " differs from reference count " +
                    std::to_string(text.size()));
  }
  EvalResult r;
  r.bleu = bleu(hyps, text.tgt);
  if (auto g = maybe_grammar(opt.data_dir); g && !hyps.empty()) {
    r.consistency = consistency_rate(*g, text.src, hyps);
  }
  return r;
}

}  // namespace strudec::cli
