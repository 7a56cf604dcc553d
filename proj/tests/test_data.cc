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
#include <cmath>
#include <filesystem>
#include <random>

#include "doctest.h"
#include "strudec/data.h"
#include "strudec/errors.h"

using namespace strudec;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

MultimodalGrammar toy_grammar() {
  return MultimodalGrammar({{"x", {{"danke", "schon"}, {"vielen", "dank"}}},
                            {"y", {{"gut"}, {"sehr", "gut"}}}});
}

}  // namespace

TEST_CASE("tokenization") {
  CHECK(tokenize("  a  b c ", TokenMode::kWord) == Tokens{"a", "b", "c"});
  CHECK(tokenize("ab c", TokenMode::kChar) == Tokens{"a", "b", "c"});
  CHECK(detokenize({"a", "b"}, TokenMode::kWord) == "a b");
  CHECK(detokenize({"a", "b"}, TokenMode::kChar) == "ab");
}

TEST_CASE("vocabulary") {
  const Vocab v = Vocab::build({"a b a"}, TokenMode::kWord);
  CHECK(v.size() == 5);
  CHECK(v.id("<pad>") == 0);
  CHECK(v.id("<eos>") == 1);
  CHECK(v.id("<unk>") == 2);
  CHECK(v.id("a") == 3);
  CHECK(v.id("b") == 4);
  CHECK(v.id("zzz") == 2);
  CHECK(v == Vocab::build({"a b a"}, TokenMode::kWord));
  // Equal counts are ordered lexicographically.
  const Vocab w = Vocab::build({"q p"}, TokenMode::kWord);
  CHECK(w.id("p") == 3);
  CHECK(w.id("q") == 4);

  const Tokens toks{"b", "a", "b"};
  CHECK(v.decode(v.encode(toks)) == toks);
  CHECK_THROWS_AS(Vocab::build(std::vector<std::string>{}, TokenMode::kWord),
                  RefusalError);

  const auto path = temp_file("strudec_vocab.txt");
  v.save(path);
  CHECK(Vocab::load(path) == v);
  std::filesystem::remove(path);
}

TEST_CASE("parallel text I/O and corpus validation") {
  const auto src = temp_file("strudec_corpus.src");
  const auto tgt = temp_file("strudec_corpus.tgt");
  ParallelText text;
  text.src = {{"a", "b"}, {"c"}};
  text.tgt = {{"x"}, {"y", "z"}};
  write_parallel_text(text, src, tgt);
  const ParallelText back = read_parallel_text(src, tgt, TokenMode::kWord);
  CHECK(back.src == text.src);
  CHECK(back.tgt == text.tgt);

  write_lines(tgt, {"x"});
  CHECK_THROWS_AS(read_parallel_text(src, tgt, TokenMode::kWord), DataError);
  CHECK_THROWS_AS(read_lines(temp_file("strudec_missing_file")), DataError);

  ParallelCorpus c;
  c.pairs = {{{3}, {}}};
  CHECK_THROWS_AS(c.validate(10), DataError);
  c.pairs = {{{3, 3, 3}, {3}}};
  CHECK_THROWS_AS(c.validate(2), DataError);
  CHECK_NOTHROW(c.validate(3));
  std::filesystem::remove(src);
  std::filesystem::remove(tgt);
}

TEST_CASE("consistency checker") {
  const MultimodalGrammar g = toy_grammar();
  const Tokens src{"x", "y"};
  CHECK(g.is_consistent(src, {"danke", "schon", "gut"}));
  CHECK(g.is_consistent(src, {"vielen", "dank", "sehr", "gut"}));
  // "Danke Dank": tokens mixed across synonyms.
  CHECK_FALSE(g.is_consistent(src, {"danke", "dank", "gut"}));
  CHECK_FALSE(g.is_consistent(src, {"danke", "schon"}));
  CHECK_FALSE(g.is_consistent(src, {"danke", "schon", "gut", "gut"}));
  CHECK_FALSE(g.is_consistent({"w"}, {"gut"}));

  const std::vector<Tokens> sources{src, src, src, src};
  const std::vector<Tokens> hyps{{"danke", "schon", "gut"},
                                 {"danke", "dank", "gut"},
                                 {"vielen", "schon", "sehr", "gut"},
                                 {"vielen", "dank", "gut"}};
  CHECK(consistency_rate(g, sources, hyps) == doctest::Approx(0.5));
  CHECK_THROWS_AS(consistency_rate(g, {}, {}), ContractError);
  CHECK_THROWS_AS(consistency_rate(g, {src}, hyps), ContractError);
}

TEST_CASE("synthetic task generation") {
  MultimodalTaskSpec spec;
  spec.train_size = 300;
  spec.test_size = 50;
  const MultimodalData a = gen_multimodal(spec);
  const MultimodalData b = gen_multimodal(spec);
  CHECK(a.train.src == b.train.src);
  CHECK(a.train.tgt == b.train.tgt);
  CHECK(a.train.size() == 300);
  CHECK(a.test.size() == 50);
  CHECK(consistency_rate(a.grammar, a.train.src, a.train.tgt) == 1.0);
  CHECK(consistency_rate(a.grammar, a.test.src, a.test.tgt) == 1.0);
  CHECK(a.grammar.groups().size() == 20);
  for (const auto& grp : a.grammar.groups()) {
    CHECK(grp.phrases.size() == 3);
    for (const auto& p : grp.phrases) {
      CHECK(p.size() == grp.phrases.front().size());  // shared length
      CHECK((p.size() >= 1 && p.size() <= 2));
    }
  }
  for (const auto& s : a.train.src) CHECK((s.size() >= 3 && s.size() <= 10));

  spec.seed = 8;
  CHECK(gen_multimodal(spec).train.tgt != a.train.tgt);

  const auto path = temp_file("strudec_grammar.txt");
  write_grammar(a.grammar, path);
  const MultimodalGrammar back = read_grammar(path);
  for (std::size_t i = 0; i < a.train.size(); ++i) {
    CHECK(back.is_consistent(a.train.src[i], a.train.tgt[i]));
  }
  std::filesystem::remove(path);

  const auto cfg = temp_file("strudec_task.cfg");
  spec.to_key_values().write(cfg);
  CHECK(MultimodalTaskSpec::from_key_values(KeyValues::read(cfg))
            .to_key_values()
            .to_string() == spec.to_key_values().to_string());
  std::filesystem::remove(cfg);
}

TEST_CASE("a single synonym makes the task deterministic") {
  MultimodalTaskSpec spec;
  spec.synonyms = 1;
  spec.train_size = 100;
  const MultimodalData d = gen_multimodal(spec);
  for (std::size_t i = 0; i < d.train.size(); ++i) {
    Tokens expect;
    for (const auto& sym : d.train.src[i]) {
      const auto& p = d.grammar.group(sym)->phrases.front();
      expect.insert(expect.end(), p.begin(), p.end());
    }
    CHECK(d.train.tgt[i] == expect);
  }
}

TEST_CASE("BLEU") {
  SUBCASE("identical corpus scores 100") {
    const std::vector<Tokens> refs{{"a", "b", "c", "d", "e"},
                                   {"f", "g", "h", "i"}};
    CHECK(bleu(refs, refs) == doctest::Approx(100.0));
  }
  SUBCASE("short hypothesis without any 4-gram scores 0") {
    // "the cat sat" vs "the cat sat down": p1..p3 = 1 but there is no
    // 4-gram to match, so the unsmoothed geometric mean is 0.
    CHECK(bleu({{"the", "cat", "sat"}}, {{"the", "cat", "sat", "down"}}) ==
          0.0);
  }
  SUBCASE("hand-counted precisions and brevity penalty") {
    // hyp: the cat sat on the mat   ref: the cat sat on a mat
    // p1 = 5/6, p2 = 3/5, p3 = 2/4, p4 = 1/3, equal lengths -> BP = 1
    const double expect = 100.0 * std::pow(5.0 / 6 * 3.0 / 5 * 2.0 / 4 / 3, 0.25);
    CHECK(bleu({{"the", "cat", "sat", "on", "the", "mat"}},
               {{"the", "cat", "sat", "on", "a", "mat"}}) ==
          doctest::Approx(expect).epsilon(1e-12));
  }
  SUBCASE("brevity penalty") {
    // hyp is the first 4 tokens of an 8-token ref: all precisions 1,
    // BP = exp(1 - 8/4).
    const Tokens ref{"a", "b", "c", "d", "e", "f", "g", "h"};
    CHECK(bleu({{"a", "b", "c", "d"}}, {ref}) ==
          doctest::Approx(100.0 * std::exp(-1.0)));
  }
  SUBCASE("clipping") {
    // hyp "a a a a a" vs ref "a b c d e": p1 = 1/5, p2 = 0 -> 0.
    CHECK(bleu({{"a", "a", "a", "a", "a"}}, {{"a", "b", "c", "d", "e"}}) == 0.0);
    BleuStats st;
    st.add({"a", "a", "a", "a", "a"}, {"a", "b", "c", "d", "e"});
    CHECK(st.matches[0] == 1);
    CHECK(st.totals[0] == 5);
  }
  SUBCASE("corpus order does not matter") {
    std::vector<Tokens> hyps{{"a", "b", "c", "d", "x"}, {"e", "f", "g", "h"},
                             {"i", "j", "k", "l", "m", "n"}};
    std::vector<Tokens> refs{{"a", "b", "c", "d", "e"}, {"e", "f", "g", "h"},
                             {"i", "j", "k", "l", "m", "o"}};
    const double base = bleu(hyps, refs);
    std::swap(hyps[0], hyps[2]);
    std::swap(refs[0], refs[2]);
    CHECK(bleu(hyps, refs) == doctest::Approx(base));
  }
  SUBCASE("count mismatch") {
    CHECK_THROWS_AS(bleu({{"a"}}, {}), ContractError);
  }
}
