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
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "strudec/commands.h"
#include "strudec/crf_approx.h"
#include "strudec/errors.h"

namespace strudec::cli {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

struct Stats {
  double mean = 0.0;
  double std = 0.0;
};

Stats summarize(const std::vector<double>& v) {
  Stats s;
  if (v.empty()) return s;
  s.mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double sq = 0.0;
  for (double x : v) sq += (x - s.mean) * (x - s.mean);
  s.std = v.size() > 1 ? std::sqrt(sq / (v.size() - 1)) : 0.0;
  return s;
}

// Per-sentence wall time of one run, split into total and CRF portion.
struct RunTime {
  double total_ms = 0.0;
  double crf_ms = 0.0;
};

RunTime time_nar(const Seq2SeqModel& model,
                 const std::vector<std::vector<int>>& sources, int n) {
  const auto t0 = Clock::now();
  for (const auto& src : sources) {
    volatile std::size_t sink = decode_nar(model, src, n).tokens.size();
    (void)sink;
  }
  return {ms_since(t0) / sources.size(), 0.0};
}

// Same steps as decode_crf, with the structured part timed separately.
RunTime time_crf(const Seq2SeqModel& model,
                 const std::vector<std::vector<int>>& sources, int n, int k) {
  RunTime rt;
  for (const auto& src : sources) {
    const auto t0 = Clock::now();
    Tape tape(false);
    Var ctx = model.encode(tape, src);
    Var hidden = model.decode_hidden(tape, ctx, n);
    const Matrix& scores = model.label_scores(tape, hidden).value();
    const auto t1 = Clock::now();
    auto transitions = model.transition_source(hidden.value());
    const crf::BeamLattice lattice =
        crf::build_beam(scores, k, std::nullopt, *transitions);
    volatile double sink = crf::beam_viterbi(lattice).score;
    (void)sink;
    rt.crf_ms += ms_since(t1);
    rt.total_ms += ms_since(t0);
  }
  rt.total_ms /= sources.size();
  rt.crf_ms /= sources.size();
  return rt;
}

RunTime time_ar(const Seq2SeqModel& teacher,
                const std::vector<std::vector<int>>& sources, int n) {
  const auto t0 = Clock::now();
  for (const auto& src : sources) {
    volatile std::size_t sink =
        teacher_greedy(teacher, src, n, /*stop_at_eos=*/false).size();
    (void)sink;
  }
  return {ms_since(t0) / sources.size(), 0.0};
}

template <typename Fn>
BenchRow measure(const std::string& name, int n, int k, const BenchOptions& opt,
                 Fn&& run) {
  for (int w = 0; w < opt.warmup_runs; ++w) run();
  std::vector<double> total;
  std::vector<double> crf;
  for (int r = 0; r < opt.runs; ++r) {
    const RunTime t = run();
    total.push_back(t.total_ms);
    crf.push_back(t.crf_ms);
  }
  const Stats st = summarize(total);
  const Stats sc = summarize(crf);
  return {name, n, k, st.mean, st.std, sc.mean, sc.std};
}

}  // namespace

double fit_exponent(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw ContractError("exponent fit needs at least two paired points");
  }
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] <= 0.0 || y[i] <= 0.0) {
      throw ContractError("exponent fit needs positive values");
    }
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= x.size();
  my /= y.size();
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(y[i]) - my);
    sxx += dx * dx;
  }
  if (sxx == 0.0) throw ContractError("exponent fit needs distinct x values");
  return sxy / sxx;
}

std::vector<BenchRow> bench_latency_command(const BenchOptions& opt) {
  if (opt.runs < 1 || opt.sentences < 1 || opt.warmup_runs < 0) {
    throw ContractError("bench needs at least one run and one sentence");
  }
  int max_n = 0;
  for (int n : opt.lengths) {
    if (n < 1) throw ContractError("bench lengths must be positive");
    max_n = std::max(max_n, n);
  }

  std::unique_ptr<Seq2SeqModel> crf_model;
  std::unique_ptr<Seq2SeqModel> teacher;
  if (!opt.checkpoint.empty()) {
    crf_model = std::move(load_checkpoint(opt.checkpoint).model);
    if (!crf_model->has_crf()) {
      throw RefusalError(opt.checkpoint.string() + " has no CRF head");
    }
  } else {
    ModelConfig mc = opt.model;
    mc.vocab_size = opt.vocab_size;
    mc.max_len = std::max(mc.max_len, max_n);
    mc.variant = Variant::kNonAutoregressive;
    mc.crf = CrfHead::kStatic;
    crf_model = std::make_unique<Seq2SeqModel>(mc, opt.seed);
  }
  if (!opt.teacher.empty()) {
    teacher = std::move(load_checkpoint(opt.teacher).model);
    if (teacher->config().variant != Variant::kAutoregressiveTeacher) {
      throw RefusalError(opt.teacher.string() + " is not a teacher checkpoint");
    }
  } else {
    // Same sizes as the non-autoregressive model.
    ModelConfig tc = crf_model->config();
    tc.variant = Variant::kAutoregressiveTeacher;
    tc.crf = CrfHead::kNone;
    teacher = std::make_unique<Seq2SeqModel>(tc, opt.seed + 1);
  }
  const int vocab = crf_model->config().vocab_size;
  if (max_n > crf_model->config().max_len || max_n > teacher->config().max_len) {
    throw ContractError("bench length exceeds the model's max_len");
  }

  std::mt19937_64 rng(opt.seed);
  std::uniform_int_distribution<int> tok(kUnkId + 1, vocab - 1);
  std::vector<BenchRow> rows;
  for (int n : opt.lengths) {
    std::vector<std::vector<int>> sources(opt.sentences);
    for (auto& s : sources) {
      s.resize(n);
      for (int& t : s) t = tok(rng);
    }
    rows.push_back(measure("nar", n, 0, opt,
                           [&] { return time_nar(*crf_model, sources, n); }));
    for (int k : opt.ks) {
      if (k < 1) throw ContractError("beam sizes must be positive");
      rows.push_back(measure("crf", n, std::min(k, vocab), opt, [&] {
        return time_crf(*crf_model, sources, n, k);
      }));
    }
    rows.push_back(measure("ar", n, 0, opt,
                           [&] { return time_ar(*teacher, sources, n); }));
  }

  if (!opt.output.empty()) {
    KeyValues cfg;
    cfg.set("command", "bench-latency");
    cfg.set("checkpoint", opt.checkpoint.string());
    cfg.set("teacher", opt.teacher.string());
    cfg.set("vocab_size", static_cast<long long>(vocab));
    cfg.set("d_model", static_cast<long long>(crf_model->config().d_model));
    cfg.set("num_layers",
            static_cast<long long>(crf_model->config().num_layers));
    cfg.set("runs", static_cast<long long>(opt.runs));
    cfg.set("warmup_runs", static_cast<long long>(opt.warmup_runs));
    cfg.set("sentences", static_cast<long long>(opt.sentences));
    cfg.set("batch_size", 1LL);
    cfg.set("seed", std::to_string(opt.seed));
    std::vector<std::string> lines{
        config_comment(cfg),
        "decoder,n,k,mean_ms,std_ms,crf_mean_ms,crf_std_ms"};
    for (const auto& r : rows) {
      std::ostringstream os;
      os << r.decoder << "," << r.n << "," << r.k << "," << r.mean_ms << ","
         << r.std_ms << "," << r.crf_mean_ms << "," << r.crf_std_ms;
      lines.push_back(os.str());
    }
    write_lines(opt.output, lines);
  }
  return rows;
}

}  // namespace strudec::cli
