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
#include <map>

#include "strudec/data.h"
#include "strudec/errors.h"

namespace strudec {
namespace {

using NgramCounts = std::map<std::vector<std::string>, long long>;

NgramCounts count_ngrams(const Tokens& toks, std::size_t n) {
  NgramCounts counts;
  if (toks.size() < n) return counts;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) {
    ++counts[std::vector<std::string>(toks.begin() + i, toks.begin() + i + n)];
  }
  return counts;
}

}  // namespace

void BleuStats::add(const Tokens& hyp, const Tokens& ref) {
  hyp_len += static_cast<long long>(hyp.size());
  ref_len += static_cast<long long>(ref.size());
  for (std::size_t n = 1; n <= 4; ++n) {
    const NgramCounts h = count_ngrams(hyp, n);
    const NgramCounts r = count_ngrams(ref, n);
    for (const auto& [gram, c] : h) {
      auto it = r.find(gram);
      if (it != r.end()) matches[n - 1] += std::min(c, it->second);
    }
    if (hyp.size() >= n) {
      totals[n - 1] += static_cast<long long>(hyp.size() - n + 1);
    }
  }
}

double BleuStats::score() const {
  if (hyp_len == 0) return 0.0;
  double log_prec = 0.0;
  for (int n = 0; n < 4; ++n) {
    if (matches[n] == 0 || totals[n] == 0) return 0.0;
    log_prec += std::log(static_cast<double>(matches[n]) / totals[n]);
  }
  const double bp =
      hyp_len < ref_len ? std::exp(1.0 - static_cast<double>(ref_len) / hyp_len)
                        : 1.0;
  return 100.0 * bp * std::exp(log_prec / 4.0);
}

double bleu(const std::vector<Tokens>& hypotheses,
            const std::vector<Tokens>& references) {
  if (hypotheses.size() != references.size()) {
    throw ContractError("hypothesis and reference counts differ");
  }
  BleuStats st;
  for (std::size_t i = 0; i < hypotheses.size(); ++i) {
    st.add(hypotheses[i], references[i]);
  }
  return st.score();
}

}  // namespace strudec
