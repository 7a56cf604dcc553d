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

#include <fstream>

#include "strudec/data.h"
#include "strudec/errors.h"

namespace strudec {

void ParallelCorpus::validate(int max_len) const {
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const auto& p = pairs[i];
    if (p.src.empty() || p.tgt.empty()) {
      throw DataError("pair " + std::to_string(i) + " has an empty side");
    }
    if (static_cast<int>(p.src.size()) > max_len ||
        static_cast<int>(p.tgt.size()) > max_len) {
      throw DataError("pair " + std::to_string(i) + " exceeds max_len " +
                      std::to_string(max_len));
    }
  }
}

std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_lines(const std::filesystem::path& path,
                 const std::vector<std::string>& lines) {
  std::ofstream out(path, std::ios::trunc | std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& l : lines) out << l << "\n";
  if (!out) throw DataError("write failed for " + path.string());
}

ParallelText read_parallel_text(const std::filesystem::path& src,
                                const std::filesystem::path& tgt,
                                TokenMode mode) {
  auto s = read_lines(src);
  auto t = read_lines(tgt);
  if (s.size() != t.size()) {
    throw DataError("line counts differ: " + src.string() + " vs " +
                    tgt.string());
  }
  ParallelText text;
  for (std::size_t i = 0; i < s.size(); ++i) {
    text.src.push_back(tokenize(s[i], mode));
    text.tgt.push_back(tokenize(t[i], mode));
  }
  return text;
}

void write_parallel_text(const ParallelText& text,
                         const std::filesystem::path& src,
                         const std::filesystem::path& tgt) {
  std::vector<std::string> s;
  std::vector<std::string> t;
  for (std::size_t i = 0; i < text.size(); ++i) {
    s.push_back(detokenize(text.src[i], TokenMode::kWord));
    t.push_back(detokenize(text.tgt[i], TokenMode::kWord));
  }
  write_lines(src, s);
  write_lines(tgt, t);
}

ParallelCorpus encode_corpus(const ParallelText& text, const Vocab& vocab) {
  ParallelCorpus c;
  c.pairs.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    c.pairs.push_back({vocab.encode(text.src[i]), vocab.encode(text.tgt[i])});
  }
  return c;
}

}  // namespace strudec
