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
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "strudec/crf_approx.h"
#include "strudec/keyvalue.h"
#include "strudec/tape.h"
#include "strudec/tensor.h"

namespace strudec {

enum class Variant { kNonAutoregressive, kAutoregressiveTeacher };

// Structured output layer on top of the non-autoregressive decoder.
enum class CrfHead { kNone, kStatic, kDynamic };

struct ModelConfig {
  int num_layers = 2;
  int d_model = 64;
  int num_heads = 4;
  int d_ffn = 128;
  int vocab_size = 0;
  int max_len = 64;
  Variant variant = Variant::kNonAutoregressive;
  CrfHead crf = CrfHead::kNone;
  int transition_dim = 32;

  // Throws ContractError on non-positive sizes or indivisible heads.
  void validate() const;

  KeyValues to_key_values() const;
  static ModelConfig from_key_values(const KeyValues& kv);
};

std::string to_string(Variant v);
std::string to_string(CrfHead h);
CrfHead crf_head_from_string(const std::string& s);

// Reserved token ids shared by every vocabulary.
inline constexpr int kPadId = 0;
inline constexpr int kEosId = 1;
inline constexpr int kUnkId = 2;

namespace nn {

// softmax(q k^T / sqrt(d_model)) v. `mask` is rows(q) x rows(k), row-major,
// true marking a disallowed key. A fully masked row throws ContractError.
Var attention(const Var& q, const Var& k, const Var& v,
              const std::vector<bool>* mask, int d_model);

// Sinusoidal position encodings, `length` x `d_model`.
Matrix sinusoid_positions(int length, int d_model);

// Strictly upper-triangular mask (position i may not see j > i).
std::vector<bool> causal_mask(int length);

}  // namespace nn

// Transformer encoder-decoder. The non-autoregressive variant decodes all
// target positions in parallel from a <pad>...<pad><eos> input with an extra
// positional attention sublayer and optionally carries CRF transition
// parameters. The autoregressive variant uses a causally masked decoder over
// the shifted target and serves as a rescoring teacher.
class Seq2SeqModel {
 public:
  Seq2SeqModel(const ModelConfig& config, std::uint64_t seed);

  const ModelConfig& config() const { return config_; }
  ParameterSet& params() { return params_; }
  const ParameterSet& params() const { return params_; }

  // Source embeddings plus positions through the encoder stack, T x d_model.
  Var encode(Tape& tape, std::span<const int> src) const;

  // Non-autoregressive decoder states h_i, target_len x d_model.
  Var decode_hidden(Tape& tape, const Var& context, int target_len) const;

  // h W + b, n x V.
  Var label_scores(Tape& tape, const Var& hidden) const;

  // Transition parameters bound to `tape`; dynamic heads also bind `hidden`.
  crf::TransitionVars transition_vars(Tape& tape, const Var& hidden) const;

  // Value-level transitions for decoding; references the model's storage.
  std::unique_ptr<crf::TransitionSource> transition_source(
      const Matrix& hidden) const;

  // Autoregressive teacher: per-step log-probabilities, n x V, where row i is
  // log p(. | input[0..i], src) and `input` is the right-shifted target
  // starting with <eos>.
  Var teacher_log_probs(Tape& tape, const Var& context,
                        std::span<const int> input) const;

  // sum_i log p(tgt_i | tgt_<i, src). Requires the teacher variant.
  double teacher_logprob(std::span<const int> src,
                         std::span<const int> tgt) const;

  bool has_crf() const { return config_.crf != CrfHead::kNone; }

  // Parameters shared with a plain non-autoregressive model (everything but
  // the CRF head).
  static bool is_shared_parameter(const std::string& name);

  void save(const std::filesystem::path& params_file) const;
  void load(const std::filesystem::path& params_file);

 private:
  struct Linear {
    Tensor* w;
    Tensor* b;
  };
  struct Norm {
    Tensor* gain;
    Tensor* bias;
  };
  struct Attention {
    Linear q, k, v, o;
  };
  struct FeedForward {
    Linear in, out;
  };
  struct EncoderLayer {
    Attention self;
    Norm norm1;
    FeedForward ffn;
    Norm norm2;
  };
  struct DecoderLayer {
    Attention self;
    Norm norm_self;
    Attention positional;  // NAR only
    Norm norm_pos;
    Attention cross;
    Norm norm_cross;
    FeedForward ffn;
    Norm norm_ffn;
  };

  Linear make_linear(const std::string& name, int in, int out,
                     std::mt19937_64& rng);
  Norm make_norm(const std::string& name);
  Attention make_attention(const std::string& name, std::mt19937_64& rng);
  FeedForward make_ffn(const std::string& name, std::mt19937_64& rng);

  Var apply(Tape& tape, const Linear& l, const Var& x) const;
  Var apply(Tape& tape, const Norm& n, const Var& x) const;
  Var apply(Tape& tape, const FeedForward& f, const Var& x) const;
  Var multi_head(Tape& tape, const Attention& a, const Var& query_in,
                 const Var& key_in, const Var& value_in,
                 const std::vector<bool>* mask) const;
  Var embed(Tape& tape, std::span<const int> ids) const;
  void check_ids(std::span<const int> ids) const;

  ModelConfig config_;
  ParameterSet params_;
  Tensor* embedding_ = nullptr;
  std::vector<EncoderLayer> encoder_;
  std::vector<DecoderLayer> decoder_;
  Linear output_{};
  Matrix positions_;

  Tensor* e1_ = nullptr;
  Tensor* e2_ = nullptr;
  Linear dyn_in_{};
  Linear dyn_out_{};
};

namespace nn {

// ReLU feed-forward max(0, x W1 + b1) W2 + b2 on tape values.
Var ffn(const Var& x, const Var& w1, const Var& b1, const Var& w2,
        const Var& b2);

}  // namespace nn

}  // namespace strudec
