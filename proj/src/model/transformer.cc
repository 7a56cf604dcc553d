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

#include "strudec/checkpoint.h"
#include "strudec/errors.h"
#include "strudec/model.h"
#include "strudec/ops.h"

namespace strudec {

void ModelConfig::validate() const {
  if (num_layers <= 0 || d_model <= 0 || num_heads <= 0 || d_ffn <= 0 ||
      vocab_size <= 0 || max_len <= 0 || transition_dim <= 0) {
    throw ContractError("model sizes must be positive");
  }
  if (d_model % num_heads != 0) {
    throw ContractError("d_model must be divisible by num_heads");
  }
  if (vocab_size <= kUnkId) {
    throw ContractError("vocabulary must include the reserved ids");
  }
  if (variant == Variant::kAutoregressiveTeacher && crf != CrfHead::kNone) {
    throw ContractError("the autoregressive teacher has no CRF head");
  }
}

std::string to_string(Variant v) {
  return v == Variant::kNonAutoregressive ? "nar" : "teacher";
}

std::string to_string(CrfHead h) {
  switch (h) {
    case CrfHead::kNone:
      return "none";
    case CrfHead::kStatic:
      return "static";
    case CrfHead::kDynamic:
      return "dynamic";
  }
  return "none";
}

CrfHead crf_head_from_string(const std::string& s) {
  if (s == "none") return CrfHead::kNone;
  if (s == "static") return CrfHead::kStatic;
  if (s == "dynamic") return CrfHead::kDynamic;
  throw DataError("unknown CRF head: " + s);
}

KeyValues ModelConfig::to_key_values() const {
  KeyValues kv;
  kv.set("num_layers", static_cast<long long>(num_layers));
  kv.set("d_model", static_cast<long long>(d_model));
  kv.set("num_heads", static_cast<long long>(num_heads));
  kv.set("d_ffn", static_cast<long long>(d_ffn));
  kv.set("vocab_size", static_cast<long long>(vocab_size));
  kv.set("max_len", static_cast<long long>(max_len));
  kv.set("variant", to_string(variant));
  kv.set("crf", to_string(crf));
  kv.set("transition_dim", static_cast<long long>(transition_dim));
  return kv;
}

ModelConfig ModelConfig::from_key_values(const KeyValues& kv) {
  ModelConfig c;
  c.num_layers = static_cast<int>(kv.get_int("num_layers"));
  c.d_model = static_cast<int>(kv.get_int("d_model"));
  c.num_heads = static_cast<int>(kv.get_int("num_heads"));
  c.d_ffn = static_cast<int>(kv.get_int("d_ffn"));
  c.vocab_size = static_cast<int>(kv.get_int("vocab_size"));
  c.max_len = static_cast<int>(kv.get_int("max_len"));
  const std::string variant = kv.get("variant");
  if (variant == "nar") {
    c.variant = Variant::kNonAutoregressive;
  } else if (variant == "teacher") {
    c.variant = Variant::kAutoregressiveTeacher;
  } else {
    throw DataError("unknown model variant: " + variant);
  }
  c.crf = crf_head_from_string(kv.get("crf", "none"));
  c.transition_dim = static_cast<int>(kv.get_int("transition_dim", 32));
  c.validate();
  return c;
}

Seq2SeqModel::Seq2SeqModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.validate();
  const int d = config_.d_model;
  const int v = config_.vocab_size;
  std::mt19937_64 rng(seed);

  embedding_ = &params_.add("embed", glorot_uniform(v, d, rng));
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = "enc." + std::to_string(l) + ".";
    EncoderLayer layer;
    layer.self = make_attention(p + "self", rng);
    layer.norm1 = make_norm(p + "norm1");
    layer.ffn = make_ffn(p + "ffn", rng);
    layer.norm2 = make_norm(p + "norm2");
    encoder_.push_back(layer);
  }
  const bool nar = config_.variant == Variant::kNonAutoregressive;
  for (int l = 0; l < config_.num_layers; ++l) {
    const std::string p = "dec." + std::to_string(l) + ".";
    DecoderLayer layer{};
    layer.self = make_attention(p + "self", rng);
    layer.norm_self = make_norm(p + "norm_self");
    if (nar) {
      layer.positional = make_attention(p + "pos", rng);
      layer.norm_pos = make_norm(p + "norm_pos");
    }
    layer.cross = make_attention(p + "cross", rng);
    layer.norm_cross = make_norm(p + "norm_cross");
    layer.ffn = make_ffn(p + "ffn", rng);
    layer.norm_ffn = make_norm(p + "norm_ffn");
    decoder_.push_back(layer);
  }
  output_ = make_linear("out", d, v, rng);

  if (config_.crf != CrfHead::kNone) {
    // Separate stream so the CRF initialization depends only on the seed and
    // not on how the shared parameters were produced.
    std::seed_seq crf_seed{seed, std::uint64_t{0x43524620}};
    std::mt19937_64 crf_rng(crf_seed);
    const int dt = config_.transition_dim;
    e1_ = &params_.add("crf.e1", glorot_uniform(v, dt, crf_rng));
    e2_ = &params_.add("crf.e2", glorot_uniform(v, dt, crf_rng));
    if (config_.crf == CrfHead::kDynamic) {
      dyn_in_ = make_linear("crf.dyn.in", 2 * d, d, crf_rng);
      dyn_out_ = make_linear("crf.dyn.out", d, dt * dt, crf_rng);
    }
  }
  positions_ = nn::sinusoid_positions(config_.max_len + 1, d);
}

Seq2SeqModel::Linear Seq2SeqModel::make_linear(const std::string& name, int in,
                                               int out, std::mt19937_64& rng) {
  Linear l;
  l.w = &params_.add(name + ".w", glorot_uniform(in, out, rng));
  l.b = &params_.add(name + ".b", Matrix::Zero(1, out));
  return l;
}

Seq2SeqModel::Norm Seq2SeqModel::make_norm(const std::string& name) {
  Norm n;
  n.gain = &params_.add(name + ".gain", Matrix::Ones(1, config_.d_model));
  n.bias = &params_.add(name + ".bias", Matrix::Zero(1, config_.d_model));
  return n;
}

Seq2SeqModel::Attention Seq2SeqModel::make_attention(const std::string& name,
                                                     std::mt19937_64& rng) {
  const int d = config_.d_model;
  Attention a;
  a.q = make_linear(name + ".q", d, d, rng);
  a.k = make_linear(name + ".k", d, d, rng);
  a.v = make_linear(name + ".v", d, d, rng);
  a.o = make_linear(name + ".o", d, d, rng);
  return a;
}

Seq2SeqModel::FeedForward Seq2SeqModel::make_ffn(const std::string& name,
                                                 std::mt19937_64& rng) {
  FeedForward f;
  f.in = make_linear(name + ".in", config_.d_model, config_.d_ffn, rng);
  f.out = make_linear(name + ".out", config_.d_ffn, config_.d_model, rng);
  return f;
}

Var Seq2SeqModel::apply(Tape& tape, const Linear& l, const Var& x) const {
  return ops::add_row(ops::matmul(x, tape.param(*l.w)), tape.param(*l.b));
}

Var Seq2SeqModel::apply(Tape& tape, const Norm& n, const Var& x) const {
  return ops::layer_norm(x, tape.param(*n.gain), tape.param(*n.bias));
}

Var Seq2SeqModel::apply(Tape& tape, const FeedForward& f, const Var& x) const {
  return nn::ffn(x, tape.param(*f.in.w), tape.param(*f.in.b),
                 tape.param(*f.out.w), tape.param(*f.out.b));
}

Var Seq2SeqModel::multi_head(Tape& tape, const Attention& a,
                             const Var& query_in, const Var& key_in,
                             const Var& value_in,
                             const std::vector<bool>* mask) const {
  Var q = apply(tape, a.q, query_in);
  Var k = apply(tape, a.k, key_in);
  Var v = apply(tape, a.v, value_in);
  const int heads = config_.num_heads;
  const int dk = config_.d_model / heads;
  std::vector<Var> parts;
  parts.reserve(heads);
  for (int h = 0; h < heads; ++h) {
    parts.push_back(nn::attention(ops::slice_cols(q, h * dk, dk),
                                  ops::slice_cols(k, h * dk, dk),
                                  ops::slice_cols(v, h * dk, dk), mask,
                                  config_.d_model));
  }
  Var joined = heads == 1 ? parts[0] : ops::concat_cols(parts);
  return apply(tape, a.o, joined);
}

void Seq2SeqModel::check_ids(std::span<const int> ids) const {
  for (int id : ids) {
    if (id < 0 || id >= config_.vocab_size) {
      throw ContractError("token id " + std::to_string(id) +
                          " outside the vocabulary");
    }
  }
}

Var Seq2SeqModel::embed(Tape& tape, std::span<const int> ids) const {
  check_ids(ids);
  const int n = static_cast<int>(ids.size());
  Var e = ops::scale(ops::gather_rows(tape.param(*embedding_), ids),
                     std::sqrt(static_cast<double>(config_.d_model)));
  return ops::add(e, tape.constant(positions_.topRows(n)));
}

Var Seq2SeqModel::encode(Tape& tape, std::span<const int> src) const {
  if (src.empty()) throw ContractError("empty source sequence");
  if (static_cast<int>(src.size()) > config_.max_len) {
    throw RefusalError("source longer than max_len");
  }
  Var x = embed(tape, src);
  for (const EncoderLayer& layer : encoder_) {
    x = apply(tape, layer.norm1,
              ops::add(x, multi_head(tape, layer.self, x, x, x, nullptr)));
    x = apply(tape, layer.norm2, ops::add(x, apply(tape, layer.ffn, x)));
  }
  return x;
}

Var Seq2SeqModel::decode_hidden(Tape& tape, const Var& context,
                                int target_len) const {
  if (config_.variant != Variant::kNonAutoregressive) {
    throw ContractError("decode_hidden needs the non-autoregressive variant");
  }
  if (target_len < 1) throw ContractError("target length must be >= 1");
  if (target_len > config_.max_len) {
    throw RefusalError("target length exceeds max_len");
  }
  std::vector<int> input(target_len, kPadId);
  input.back() = kEosId;
  Var x = embed(tape, input);
  Var pos = tape.constant(positions_.topRows(target_len));
  for (const DecoderLayer& layer : decoder_) {
    x = apply(tape, layer.norm_self,
              ops::add(x, multi_head(tape, layer.self, x, x, x, nullptr)));
    x = apply(tape, layer.norm_pos,
              ops::add(x, multi_head(tape, layer.positional, pos, pos, x,
                                     nullptr)));
    x = apply(tape, layer.norm_cross,
              ops::add(x, multi_head(tape, layer.cross, x, context, context,
                                     nullptr)));
    x = apply(tape, layer.norm_ffn, ops::add(x, apply(tape, layer.ffn, x)));
  }
  return x;
}

Var Seq2SeqModel::label_scores(Tape& tape, const Var& hidden) const {
  return apply(tape, output_, hidden);
}

crf::TransitionVars Seq2SeqModel::transition_vars(Tape& tape,
                                                  const Var& hidden) const {
  if (!has_crf()) throw ContractError("model has no CRF head");
  crf::TransitionVars tv;
  tv.e1 = tape.param(*e1_);
  tv.e2 = tape.param(*e2_);
  tv.transition_dim = config_.transition_dim;
  if (config_.crf == CrfHead::kDynamic) {
    tv.hidden = hidden;
    tv.w1 = tape.param(*dyn_in_.w);
    tv.b1 = tape.param(*dyn_in_.b);
    tv.w2 = tape.param(*dyn_out_.w);
    tv.b2 = tape.param(*dyn_out_.b);
  }
  return tv;
}

std::unique_ptr<crf::TransitionSource> Seq2SeqModel::transition_source(
    const Matrix& hidden) const {
  if (!has_crf()) throw ContractError("model has no CRF head");
  if (config_.crf == CrfHead::kStatic) {
    return std::make_unique<crf::StaticTransitions>(e1_->data(), e2_->data());
  }
  const crf::DynamicTransitionNet net{dyn_in_.w->data(), dyn_in_.b->data(),
                                      dyn_out_.w->data(), dyn_out_.b->data(),
                                      config_.transition_dim};
  return std::make_unique<crf::DynamicTransitions>(net, e1_->data(),
                                                   e2_->data(), hidden);
}

Var Seq2SeqModel::teacher_log_probs(Tape& tape, const Var& context,
                                    std::span<const int> input) const {
  if (config_.variant != Variant::kAutoregressiveTeacher) {
    throw ContractError("teacher scoring needs the autoregressive variant");
  }
  const int n = static_cast<int>(input.size());
  if (n < 1) throw ContractError("empty teacher input");
  if (n > config_.max_len + 1) {
    throw RefusalError("teacher input exceeds max_len");
  }
  const std::vector<bool> mask = nn::causal_mask(n);
  Var x = embed(tape, input);
  for (const DecoderLayer& layer : decoder_) {
    x = apply(tape, layer.norm_self,
              ops::add(x, multi_head(tape, layer.self, x, x, x, &mask)));
    x = apply(tape, layer.norm_cross,
              ops::add(x, multi_head(tape, layer.cross, x, context, context,
                                     nullptr)));
    x = apply(tape, layer.norm_ffn, ops::add(x, apply(tape, layer.ffn, x)));
  }
  return ops::log_softmax_rows(apply(tape, output_, x));
}

double Seq2SeqModel::teacher_logprob(std::span<const int> src,
                                     std::span<const int> tgt) const {
  if (config_.variant != Variant::kAutoregressiveTeacher) {
    throw ContractError("teacher_logprob needs the autoregressive variant");
  }
  if (tgt.empty()) throw ContractError("empty target");
  check_ids(tgt);
  Tape tape(false);
  Var ctx = encode(tape, src);
  std::vector<int> input;
  input.reserve(tgt.size());
  input.push_back(kEosId);
  input.insert(input.end(), tgt.begin(), tgt.end() - 1);
  const Matrix& lp = teacher_log_probs(tape, ctx, input).value();
  double total = 0.0;
  for (std::size_t i = 0; i < tgt.size(); ++i) {
    total += lp(static_cast<Eigen::Index>(i), tgt[i]);
  }
  return total;
}

bool Seq2SeqModel::is_shared_parameter(const std::string& name) {
  return name.rfind("crf.", 0) != 0;
}

void Seq2SeqModel::save(const std::filesystem::path& params_file) const {
  save_parameters(params_, params_file);
}

void Seq2SeqModel::load(const std::filesystem::path& params_file) {
  load_parameters(params_, params_file);
}

}  // namespace strudec
