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
#include <random>

#include "strudec/data.h"
#include "strudec/errors.h"

namespace strudec {

void MultimodalTaskSpec::validate() const {
  if (num_symbols < 1 || synonyms < 1) {
    throw ContractError("task needs at least one symbol and one synonym");
  }
  if (min_phrase_len < 1 || max_phrase_len < min_phrase_len) {
    throw ContractError("bad phrase length range");
  }
  if (min_sentence_len < 1 || max_sentence_len < min_sentence_len) {
    throw ContractError("bad sentence length range");
  }
  if (train_size < 0 || test_size < 0) {
    throw ContractError("corpus sizes must be non-negative");
  }
}

KeyValues MultimodalTaskSpec::to_key_values() const {
  KeyValues kv;
  kv.set("num_symbols", static_cast<long long>(num_symbols));
  kv.set("synonyms", static_cast<long long>(synonyms));
  kv.set("min_phrase_len", static_cast<long long>(min_phrase_len));
  kv.set("max_phrase_len", static_cast<long long>(max_phrase_len));
  kv.set("mixed_lengths", static_cast<long long>(mixed_lengths ? 1 : 0));
  kv.set("min_sentence_len", static_cast<long long>(min_sentence_len));
  kv.set("max_sentence_len", static_cast<long long>(max_sentence_len));
  kv.set("train_size", static_cast<long long>(train_size));
  kv.set("test_size", static_cast<long long>(test_size));
  kv.set("seed", std::to_string(seed));
  return kv;
}

MultimodalTaskSpec MultimodalTaskSpec::from_key_values(const KeyValues& kv) {
  MultimodalTaskSpec s;
  s.num_symbols = static_cast<int>(kv.get_int("num_symbols", s.num_symbols));
  s.synonyms = static_cast<int>(kv.get_int("synonyms", s.synonyms));
  s.min_phrase_len =
      static_cast<int>(kv.get_int("min_phrase_len", s.min_phrase_len));
  s.max_phrase_len =
      static_cast<int>(kv.get_int("max_phrase_len", s.max_phrase_len));
  s.mixed_lengths = kv.get_int("mixed_lengths", s.mixed_lengths ? 1 : 0) != 0;
  s.min_sentence_len =
      static_cast<int>(kv.get_int("min_sentence_len", s.min_sentence_len));
  s.max_sentence_len =
      static_cast<int>(kv.get_int("max_sentence_len", s.max_sentence_len));
  s.train_size = static_cast<int>(kv.get_int("train_size", s.train_size));
  s.test_size = static_cast<int>(kv.get_int("test_size", s.test_size));
  s.seed = static_cast<std::uint64_t>(
      kv.get_int("seed", static_cast<long long>(s.seed)));
  s.validate();
  return s;
}

MultimodalGrammar::MultimodalGrammar(std::vector<SynonymGroup> groups)
    : groups_(std::move(groups)) {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (!by_symbol_.emplace(groups_[i].symbol, static_cast<int>(i)).second) {
      throw ContractError("duplicate source symbol " + groups_[i].symbol);
    }
    const auto& ph = groups_[i].phrases;
    for (std::size_t a = 0; a < ph.size(); ++a) {
      if (ph[a].empty()) throw ContractError("empty phrase");
      for (std::size_t b = a + 1; b < ph.size(); ++b) {
        if (ph[a] == ph[b]) {
          throw ContractError("duplicate phrase in group " +
                              groups_[i].symbol);
        }
      }
    }
  }
}

const SynonymGroup* MultimodalGrammar::group(const std::string& symbol) const {
  auto it = by_symbol_.find(symbol);
  return it == by_symbol_.end() ? nullptr : &groups_[it->second];
}

bool MultimodalGrammar::is_consistent(const Tokens& src,
                                      const Tokens& hyp) const {
  // reach[p]: hyp[0, p) splits into phrases for the first j symbols.
  std::vector<char> reach(hyp.size() + 1, 0);
  reach[0] = 1;
  for (const auto& sym : src) {
    const SynonymGroup* g = group(sym);
    if (g == nullptr) return false;
    std::vector<char> next(hyp.size() + 1, 0);
    for (std::size_t p = 0; p <= hyp.size(); ++p) {
      if (!reach[p]) continue;
      for (const Tokens& phrase : g->phrases) {
        if (p + phrase.size() > hyp.size()) continue;
        if (std::equal(phrase.begin(), phrase.end(), hyp.begin() + p)) {
          next[p + phrase.size()] = 1;
        }
      }
    }
    reach.swap(next);
  }
  return reach[hyp.size()] != 0;
}

MultimodalGrammar make_grammar(const MultimodalTaskSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::uniform_int_distribution<int> len_dist(spec.min_phrase_len,
                                              spec.max_phrase_len);
  std::vector<SynonymGroup> groups;
  for (int g = 0; g < spec.num_symbols; ++g) {
    SynonymGroup grp;
    grp.symbol = "s" + std::to_string(g);
    const int shared_len = len_dist(rng);
    for (int p = 0; p < spec.synonyms; ++p) {
      const int len = spec.mixed_lengths ? len_dist(rng) : shared_len;
      Tokens phrase;
      for (int j = 0; j < len; ++j) {
        phrase.push_back("t" + std::to_string(g) + "_" + std::to_string(p) +
                         static_cast<char>('a' + j));
      }
      grp.phrases.push_back(std::move(phrase));
    }
    groups.push_back(std::move(grp));
  }
  return MultimodalGrammar(std::move(groups));
}

void write_grammar(const MultimodalGrammar& grammar,
                   const std::filesystem::path& path) {
  std::vector<std::string> lines;
  for (const auto& g : grammar.groups()) {
    std::string line = g.symbol + "\t";
    for (std::size_t p = 0; p < g.phrases.size(); ++p) {
      if (p > 0) line += " | ";
      line += detokenize(g.phrases[p], TokenMode::kWord);
    }
    lines.push_back(std::move(line));
  }
  write_lines(path, lines);
}

MultimodalGrammar read_grammar(const std::filesystem::path& path) {
  std::vector<SynonymGroup> groups;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos) {
      throw DataError("grammar line without a tab in " + path.string());
    }
    SynonymGroup g;
    g.symbol = line.substr(0, tab);
    std::string rest = line.substr(tab + 1);
    std::size_t start = 0;
    while (true) {
      const auto bar = rest.find('|', start);
      Tokens phrase = tokenize(rest.substr(start, bar - start), TokenMode::kWord);
      if (phrase.empty()) throw DataError("empty phrase in " + path.string());
      g.phrases.push_back(std::move(phrase));
      if (bar == std::string::npos) break;
      start = bar + 1;
    }
    groups.push_back(std::move(g));
  }
  return MultimodalGrammar(std::move(groups));
}

MultimodalData gen_multimodal(const MultimodalTaskSpec& spec) {
  MultimodalData data{make_grammar(spec), {}, {}};
  // Sentences draw from a stream independent of the grammar's.
  std::seed_seq seq{spec.seed, std::uint64_t{1}};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> len_dist(spec.min_sentence_len,
                                              spec.max_sentence_len);
  std::uniform_int_distribution<int> sym_dist(0, spec.num_symbols - 1);
  std::uniform_int_distribution<int> syn_dist(0, spec.synonyms - 1);
  const auto& groups = data.grammar.groups();
  auto sample = [&](ParallelText& out, int count) {
    for (int i = 0; i < count; ++i) {
      const int len = len_dist(rng);
      Tokens src;
      Tokens tgt;
      for (int j = 0; j < len; ++j) {
        const SynonymGroup& g = groups[sym_dist(rng)];
        src.push_back(g.symbol);
        const Tokens& phrase = g.phrases[syn_dist(rng)];
        tgt.insert(tgt.end(), phrase.begin(), phrase.end());
      }
      out.src.push_back(std::move(src));
      out.tgt.push_back(std::move(tgt));
    }
  };
  sample(data.train, spec.train_size);
  sample(data.test, spec.test_size);
  return data;
}

double consistency_rate(const MultimodalGrammar& grammar,
                        const std::vector<Tokens>& sources,
                        const std::vector<Tokens>& hypotheses) {
  if (hypotheses.empty()) {
    throw ContractError("consistency rate of an empty hypothesis set");
  }
  if (sources.size() != hypotheses.size()) {
    throw ContractError("sources and hypotheses differ in count");
  }
  std::size_t ok = 0;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    if (grammar.is_consistent(sources[i], hypotheses[i])) ++ok;
  }
  return static_cast<double>(ok) / static_cast<double>(hypotheses.size());
}

}  // namespace strudec
