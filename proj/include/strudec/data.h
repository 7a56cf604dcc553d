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
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "strudec/keyvalue.h"

namespace strudec {

using Tokens = std::vector<std::string>;

enum class TokenMode { kWord, kChar };

TokenMode token_mode_from_string(const std::string& s);

// Whitespace split (word mode) or one token per non-space character.
Tokens tokenize(const std::string& line, TokenMode mode);
std::string detokenize(const Tokens& tokens, TokenMode mode);

// Token <-> id bijection. Ids 0, 1, 2 are <pad>, <eos>, <unk>.
class Vocab {
 public:
  static constexpr const char* kPad = "<pad>";
  static constexpr const char* kEos = "<eos>";
  static constexpr const char* kUnk = "<unk>";

  Vocab();

  // Frequency-ordered ids after the reserved ones; equal counts are ordered
  // lexicographically. Throws RefusalError on an empty corpus.
  static Vocab build(const std::vector<std::string>& lines, TokenMode mode);
  static Vocab build(const std::vector<Tokens>& sentences);

  // One token per line, line index = id.
  static Vocab load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  int size() const { return static_cast<int>(tokens_.size()); }
  int id(const std::string& token) const;  // kUnkId when unseen
  const std::string& token(int id) const;
  bool contains(const std::string& token) const;

  std::vector<int> encode(const Tokens& tokens) const;
  Tokens decode(std::span<const int> ids) const;

  const std::vector<std::string>& tokens() const { return tokens_; }
  bool operator==(const Vocab& other) const { return tokens_ == other.tokens_; }

 private:
  void add(const std::string& token);

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

struct SentencePair {
  std::vector<int> src;
  std::vector<int> tgt;
};

// Token-id sentence pairs. Both sides are non-empty and at most max_len long.
struct ParallelCorpus {
  std::vector<SentencePair> pairs;

  std::size_t size() const { return pairs.size(); }
  bool empty() const { return pairs.empty(); }
  // Throws DataError when a side is empty or longer than max_len.
  void validate(int max_len) const;
};

// Tokenized source/target text, aligned by index.
struct ParallelText {
  std::vector<Tokens> src;
  std::vector<Tokens> tgt;

  std::size_t size() const { return src.size(); }
};

std::vector<std::string> read_lines(const std::filesystem::path& path);
void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines);

// Parallel plain text: one sentence per line, source and target in separate
// files with equal line counts.
ParallelText read_parallel_text(const std::filesystem::path& src,
                                const std::filesystem::path& tgt,
                                TokenMode mode);
void write_parallel_text(const ParallelText& text,
                         const std::filesystem::path& src,
                         const std::filesystem::path& tgt);

ParallelCorpus encode_corpus(const ParallelText& text, const Vocab& vocab);

// ---------------------------------------------------------------------------
// Synthetic multimodal translation task.
//
// Each source symbol owns a synonym group of `synonyms` distinct target
// phrases. A target sentence realizes every source symbol with one phrase
// drawn uniformly, so several targets are equally correct and mixing tokens
// of different phrases yields an inconsistent output.

struct MultimodalTaskSpec {
  int num_symbols = 20;
  int synonyms = 3;
  int min_phrase_len = 1;
  int max_phrase_len = 2;
  // When false every phrase of a group shares one length, so the target
  // length is a function of the source.
  bool mixed_lengths = false;
  int min_sentence_len = 3;
  int max_sentence_len = 10;
  int train_size = 5000;
  int test_size = 500;
  std::uint64_t seed = 7;

  void validate() const;
  KeyValues to_key_values() const;
  static MultimodalTaskSpec from_key_values(const KeyValues& kv);
};

struct SynonymGroup {
  std::string symbol;
  std::vector<Tokens> phrases;
};

class MultimodalGrammar {
 public:
  explicit MultimodalGrammar(std::vector<SynonymGroup> groups);

  const std::vector<SynonymGroup>& groups() const { return groups_; }
  // nullptr for unknown symbols.
  const SynonymGroup* group(const std::string& symbol) const;

  // True iff `hyp` splits into consecutive phrases, the j-th being a member
  // of the group of source symbol j.
  bool is_consistent(const Tokens& src, const Tokens& hyp) const;

 private:
  std::vector<SynonymGroup> groups_;
  std::unordered_map<std::string, int> by_symbol_;
};

struct MultimodalData {
  MultimodalGrammar grammar;
  ParallelText train;
  ParallelText test;
};

MultimodalGrammar make_grammar(const MultimodalTaskSpec& spec);

// One group per line: symbol, a tab, then phrases separated by " | ".
void write_grammar(const MultimodalGrammar& grammar,
                   const std::filesystem::path& path);
MultimodalGrammar read_grammar(const std::filesystem::path& path);

MultimodalData gen_multimodal(const MultimodalTaskSpec& spec);

// Fraction of hypotheses that are consistent with their source. Throws
// ContractError on an empty or misaligned set.
double consistency_rate(const MultimodalGrammar& grammar,
                        const std::vector<Tokens>& sources,
                        const std::vector<Tokens>& hypotheses);

// ---------------------------------------------------------------------------
// Corpus BLEU-4 without smoothing, in [0, 100].

struct BleuStats {
  long long matches[4] = {0, 0, 0, 0};
  long long totals[4] = {0, 0, 0, 0};
  long long hyp_len = 0;
  long long ref_len = 0;

  void add(const Tokens& hyp, const Tokens& ref);
  double score() const;
};

double bleu(const std::vector<Tokens>& hypotheses,
            const std::vector<Tokens>& references);

}  // namespace strudec
