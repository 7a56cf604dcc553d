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
#include <fstream>
#include <map>
#include <sstream>

#include "strudec/data.h"
#include "strudec/errors.h"
#include "strudec/model.h"

namespace strudec {

TokenMode token_mode_from_string(const std::string& s) {
  if (s == "word") return TokenMode::kWord;
  if (s == "char") return TokenMode::kChar;
  throw DataError("unknown token mode: " + s);
}

Tokens tokenize(const std::string& line, TokenMode mode) {
  Tokens out;
  if (mode == TokenMode::kWord) {
    std::istringstream in(line);
    std::string tok;
    while (in >> tok) out.push_back(tok);
  } else {
    for (char c : line) {
      if (c != ' ' && c != '\t' && c != '\r') out.emplace_back(1, c);
    }
  }
  return out;
}

std::string detokenize(const Tokens& tokens, TokenMode mode) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i > 0 && mode == TokenMode::kWord) out += ' ';
    out += tokens[i];
  }
  return out;
}

Vocab::Vocab() {
  add(kPad);
  add(kEos);
  add(kUnk);
}

void Vocab::add(const std::string& token) {
  index_.emplace(token, static_cast<int>(tokens_.size()));
  tokens_.push_back(token);
}

Vocab Vocab::build(const std::vector<std::string>& lines, TokenMode mode) {
  std::vector<Tokens> sentences;
  sentences.reserve(lines.size());
  for (const auto& l : lines) sentences.push_back(tokenize(l, mode));
  return build(sentences);
}

Vocab Vocab::build(const std::vector<Tokens>& sentences) {
  std::map<std::string, long long> counts;
  for (const auto& s : sentences) {
    for (const auto& t : s) ++counts[t];
  }
  if (counts.empty()) throw RefusalError("cannot build a vocabulary from an empty corpus");
  std::vector<std::pair<std::string, long long>> order(counts.begin(),
                                                       counts.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  Vocab v;
  for (const auto& [tok, n] : order) {
    if (!v.contains(tok)) v.add(tok);
  }
  return v;
}

Vocab Vocab::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());
  std::vector<std::string> toks;
  std::string line;
  while (std::getline(in, line)) toks.push_back(line);
  if (toks.size() < 3 || toks[0] != kPad || toks[1] != kEos ||
      toks[2] != kUnk) {
    throw DataError(path.string() + ": reserved tokens missing");
  }
  Vocab v;
  for (std::size_t i = 3; i < toks.size(); ++i) {
    if (v.contains(toks[i])) throw DataError("duplicate token " + toks[i]);
    v.add(toks[i]);
  }
  return v;
}

void Vocab::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& t : tokens_) out << t << "\n";
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnkId : it->second;
}

const std::string& Vocab::token(int id) const {
  if (id < 0 || id >= size()) {
    throw ContractError("token id " + std::to_string(id) + " out of range");
  }
  return tokens_[id];
}

bool Vocab::contains(const std::string& token) const {
  return index_.count(token) > 0;
}

std::vector<int> Vocab::encode(const Tokens& tokens) const {
  std::vector<int> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(id(t));
  return ids;
}

Tokens Vocab::decode(std::span<const int> ids) const {
  Tokens out;
  out.reserve(ids.size());
  for (int i : ids) out.push_back(token(i));
  return out;
}

}  // namespace strudec
