// Copyright 2026 The Streamsan Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Acceptance suite. Runs every exit criterion at its stated tolerance and
// runtime budget, printing one PASS/FAIL line per criterion. Exits non-zero
// if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "absl/strings/str_cat.h"
#include "absl/strings/str_format.h"
#include "streamsan/core.h"
#include "streamsan/evaluation.h"
#include "streamsan/offline_sanitizer.h"
#include "streamsan/pipeline.h"
#include "streamsan/quantile_sketch.h"
#include "streamsan/random.h"
#include "streamsan/stream_sanitizer.h"

namespace streamsan {
namespace {

constexpr uint32_t kUniverse = 1024;
constexpr double kAlpha = 0.05;
constexpr double kBeta = 0.05;
constexpr double kSketchAlpha = 0.01;

struct Verdict {
  bool pass = false;
  std::string detail;
};

// Every composition check made anywhere in the suite.
struct CompositionLedger {
  int64_t checks = 0;
  int64_t violations = 0;

  void Record(bool holds) {
    ++checks;
    if (!holds) ++violations;
  }
  void Record(double stream_error, std::span<const double> block_errors) {
    double worst = 0;
    for (double e : block_errors) worst = std::max(worst, e);
    Record(stream_error <= worst + kCompositionTolerance);
  }
};

CompositionLedger ledger;

PipelineConfig CriterionThreeConfig() {
  PipelineConfig c(*Domain::OfSize(kUniverse));
  c.stream.privacy = {1.0, 0.0};
  c.stream.accuracy = {kAlpha, kBeta};
  c.auto_block_size = true;
  c.sketch_alpha = kSketchAlpha;
  c.quantiles = {0.1, 0.25, 0.5, 0.75, 0.9};
  return c;
}

std::vector<Index> CriterionThreeStream(int64_t n) {
  return SkewedStream(16 * n, kUniverse, kUniverse / 2, 20260101);
}

void RecordAll(const EvalSummary& s) {
  for (const TrialOutcome& o : s.outcomes) ledger.Record(o.composition_holds);
}

Verdict NoiselessRoundTrip() {
  Rng rng(1);
  int ok = 0;
  for (int t = 0; t < 50; ++t) {
    const uint32_t u = 2 + static_cast<uint32_t>(rng.NextBits() % 1023);
    const int64_t n = 1 + static_cast<int64_t>(rng.NextBits() % 500);
    const int64_t k = 1 + static_cast<int64_t>(rng.NextBits() % 20);
    StreamConfig cfg;
    cfg.block_size = n;
    cfg.privacy.epsilon = kNoiseless;
    cfg.seed = rng.NextBits();
    StreamSanitizer s = *StreamSanitizer::Create(*Domain::OfSize(u), cfg);
    s.EnableErrorLog();
    std::vector<Index> in(static_cast<size_t>(n * k));
    for (Index& y : in) y = static_cast<Index>(rng.NextBits() % u);
    std::vector<Index> out;
    bool blocks_match = true;
    for (size_t i = 0; i < in.size(); ++i) {
      if (std::optional<Block> b = s.Push(in[i])) {
        std::vector<Index> expected(in.begin() + (i + 1 - n), in.begin() + i + 1);
        std::sort(expected.begin(), expected.end());
        blocks_match = blocks_match && *b == expected;
        out.insert(out.end(), b->begin(), b->end());
      }
    }
    const double err = *KolmogorovError(in, out, u);
    ledger.Record(err, s.block_errors());
    if (blocks_match && err == 0.0 && s.Finish().ok()) ++ok;
  }
  return {ok == 50, absl::StrCat(ok, "/50 streams exact")};
}

Verdict StreamUtility() {
  const PipelineConfig c = CriterionThreeConfig();
  const int64_t n = *ResolveBlockSize(c);
  const std::vector<Index> in = CriterionThreeStream(n);
  const EvalSummary s = *EvalUtility(c, in, 100);
  RecordAll(s);
  int64_t hits = 0;
  double worst = 0;
  for (const TrialOutcome& o : s.outcomes) {
    if (o.stream_error_vs_original <= kAlpha) ++hits;
    worst = std::max(worst, o.stream_error_vs_original);
  }
  return {hits >= 90,
          absl::StrFormat("n=%d m=%d: %d/100 trials with error <= %.2f "
                          "(need >= 90), worst %.4f",
                          n, in.size(), hits, kAlpha, worst)};
}

// Splits newline-delimited output into per-block byte strings.
std::vector<std::string> SplitBlocks(const std::string& text, int64_t n) {
  std::vector<std::string> blocks;
  std::string current;
  int64_t lines = 0;
  for (char ch : text) {
    current.push_back(ch);
    if (ch == '\n' && ++lines == n) {
      blocks.push_back(std::move(current));
      current.clear();
      lines = 0;
    }
  }
  if (!current.empty()) blocks.push_back(current);
  return blocks;
}

Verdict BlockLocality() {
  Rng rng(4);
  int ok = 0;
  for (int t = 0; t < 20; ++t) {
    const uint32_t u = 2 + static_cast<uint32_t>(rng.NextBits() % 1023);
    const int64_t n = 50 + static_cast<int64_t>(rng.NextBits() % 2000);
    const int64_t k = 2 + static_cast<int64_t>(rng.NextBits() % 8);
    PipelineConfig c(*Domain::OfSize(u));
    c.stream.privacy.epsilon = 1.0;
    c.stream.block_size = n;
    c.stream.seed = rng.NextBits();
    std::vector<Index> in = UniformStream(n * k, u, rng.NextBits());
    const int64_t j = static_cast<int64_t>(rng.NextBits() % k);
    const size_t i = static_cast<size_t>(j * n + rng.NextBits() % n);
    std::vector<Index> flipped = in;
    flipped[i] = (flipped[i] + 1 + static_cast<Index>(rng.NextBits() % (u - 1))) % u;

    auto run = [&](const std::vector<Index>& data, std::string& text) {
      std::ostringstream out;
      Pipeline p = *Pipeline::Create(c, &out);
      for (Index y : data) p.Push(y);
      PipelineResult r = *p.Finish();
      ledger.Record(r.composition_holds);
      text = out.str();
    };
    std::string a;
    std::string b;
    run(in, a);
    run(flipped, b);
    const std::vector<std::string> ba = SplitBlocks(a, n);
    const std::vector<std::string> bb = SplitBlocks(b, n);
    bool same = ba.size() == static_cast<size_t>(k) && bb.size() == ba.size();
    for (size_t x = 0; same && x < ba.size(); ++x) {
      if (static_cast<int64_t>(x) != j) same = ba[x] == bb[x];
    }
    if (same) ++ok;
  }
  return {ok == 20, absl::StrCat(ok, "/20 (stream, block) pairs byte-identical "
                                     "outside the flipped block")};
}

Verdict ChernoffPlanner() {
  PipelineConfig c(*Domain::OfSize(kUniverse));
  c.stream.privacy = {1.0, 0.0};
  c.stream.accuracy = {kAlpha, 0.01};
  c.auto_block_size = true;
  c.quantiles = {0.5};
  const int64_t n = *ResolveBlockSize(c);
  const int64_t k = 100;
  const std::vector<Index> in = SkewedStream(k * n, kUniverse, 300, 55);
  const EvalSummary s = *EvalUtility(c, in, 300);
  RecordAll(s);
  const double bound = std::exp(-2.0 * k * 0.01 * 0.01);
  return {s.chernoff_exceed_rate <= bound + 0.05,
          absl::StrFormat("n=%d k=%d: exceed rate %.4f <= %.4f + 0.05; "
                          "per-block failure rate %.5f",
                          n, k, s.chernoff_exceed_rate, bound,
                          s.per_block_failure_rate)};
}

Verdict Amplification() {
  const double got = AmplifiedPrivacy(1.0, 0.0, 0.1)->epsilon;
  const double expected = std::log(1.0 + 0.1 * (std::exp(1.0) - 1.0));
  bool ok = std::abs(got - expected) <= 1e-12;
  double previous = 0;
  for (int i = 1; i <= 100; ++i) {
    const double e = AmplifiedPrivacy(1.0, 0.0, i / 100.0)->epsilon;
    ok = ok && e <= 1.0 + 1e-15 && e > previous;
    previous = e;
  }
  return {ok, absl::StrFormat("eps'(1, 0.1) = %.15f vs %.15f; grid monotone "
                              "and <= eps0",
                              got, expected)};
}

Verdict SketchVsOracle() {
  const uint32_t capacity = QuantileSketch::CapacityForAccuracy(kSketchAlpha);
  const int n = 100000;
  int passes[2] = {0, 0};
  for (int dist = 0; dist < 2; ++dist) {
    for (int t = 0; t < 100; ++t) {
      const uint64_t seed = 7000 + 100 * dist + t;
      const std::vector<Index> s =
          dist == 0 ? UniformStream(n, kUniverse, seed)
                    : SkewedStream(n, kUniverse, 77, seed);
      QuantileSketch sk = *QuantileSketch::Create(kUniverse, capacity, seed);
      std::vector<uint64_t> exact(kUniverse + 1, 0);
      for (Index y : s) {
        sk.Update(y);
        ++exact[y + 1];
      }
      for (size_t x = 1; x < exact.size(); ++x) exact[x] += exact[x - 1];
      const std::vector<uint64_t> est = sk.AllRankEstimates();
      double worst = 0;
      for (size_t x = 0; x < exact.size(); ++x) {
        worst = std::max(worst, std::abs(static_cast<double>(est[x]) -
                                         static_cast<double>(exact[x])));
      }
      if (worst <= kSketchAlpha * n) ++passes[dist];
    }
  }
  // Exactness below capacity.
  bool exact_ok = true;
  Rng rng(8);
  for (int t = 0; t < 50; ++t) {
    QuantileSketch sk = *QuantileSketch::Create(kUniverse, capacity, t);
    std::vector<Index> s(rng.NextBits() % capacity + 1);
    for (Index& y : s) {
      y = static_cast<Index>(rng.NextBits() % kUniverse);
      sk.Update(y);
    }
    const std::vector<uint64_t> est = sk.AllRankEstimates();
    for (Index x = 0; x <= kUniverse; x += 1) {
      exact_ok = exact_ok && est[x] == static_cast<uint64_t>(ExactRank(s, x));
    }
  }
  return {passes[0] >= 99 && passes[1] >= 99 && exact_ok,
          absl::StrFormat("capacity %d: uniform %d/100, skewed %d/100 within "
                          "0.01 N (need >= 99); exact below capacity: %s",
                          capacity, passes[0], passes[1],
                          exact_ok ? "yes" : "no")};
}

Verdict EndToEndQuantiles() {
  PipelineConfig c = CriterionThreeConfig();
  c.snapshot_every = 1;
  const int64_t n = *ResolveBlockSize(c);
  const std::vector<Index> in = CriterionThreeStream(n);
  const double tolerance = kAlpha + kSketchAlpha + 0.01;
  const EvalSummary s = *EvalUtility(c, in, 100, 0, tolerance);
  RecordAll(s);
  int64_t final_ok = 0;
  int64_t snapshot_ok = 0;
  double worst = 0;
  for (const TrialOutcome& o : s.outcomes) {
    if (o.max_quantile_error <= tolerance) ++final_ok;
    if (o.max_snapshot_quantile_error <= tolerance) ++snapshot_ok;
    worst = std::max({worst, o.max_quantile_error,
                      o.max_snapshot_quantile_error});
  }
  return {final_ok >= 90 && snapshot_ok >= 90,
          absl::StrFormat("final %d/100, snapshots %d/100 within %.2f "
                          "(need >= 90), worst %.4f",
                          final_ok, snapshot_ok, tolerance, worst)};
}

Verdict MemoryStructure() {
  PipelineConfig c = CriterionThreeConfig();
  c.stream.partial_block_policy = PartialBlockPolicy::kSanitizePartial;
  c.stream.seed = 99;
  const int64_t n = *ResolveBlockSize(c);
  const int64_t m = 1000000;
  Pipeline p = *Pipeline::Create(c, nullptr);
  Rng rng(9);
  bool retained_ok = true;
  for (int64_t i = 0; i < m; ++i) {
    p.Push(static_cast<Index>(rng.NextBits() % kUniverse));
    retained_ok = retained_ok && p.sanitizer().buffered() <= static_cast<size_t>(n);
  }
  const PipelineResult r = *p.Finish();
  ledger.Record(r.composition_holds);

  // Sketch bound after every single update.
  const uint32_t capacity = QuantileSketch::CapacityForAccuracy(kSketchAlpha);
  QuantileSketch sk = *QuantileSketch::Create(kUniverse, capacity, 1);
  bool sketch_ok = true;
  size_t peak = 0;
  for (int64_t i = 0; i < m; ++i) {
    sk.Update(static_cast<Index>(rng.NextBits() % kUniverse));
    peak = std::max(peak, sk.stored_items());
    sketch_ok = sketch_ok &&
                sk.stored_items() <= QuantileSketch::StorageBound(capacity, sk.count()) &&
                sk.stored_weight() == sk.count();
  }
  const bool ok = retained_ok && sketch_ok &&
                  r.peak_buffered <= static_cast<size_t>(n) &&
                  r.sketch_peak_stored <= r.sketch_storage_bound;
  return {ok, absl::StrFormat(
                  "peak retained %d <= n=%d; pipeline sketch peak %d <= %d; "
                  "standalone sketch peak %d <= %d",
                  r.peak_buffered, n, r.sketch_peak_stored,
                  r.sketch_storage_bound, peak,
                  QuantileSketch::StorageBound(capacity, m))};
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Verdict()> run;
};

int Main() {
  // The composition criterion is evaluated last, over everything recorded.
  const std::vector<Criterion> criteria = {
      {1, "noiseless round trip", 5, NoiselessRoundTrip},
      {3, "stream utility at calibrated block size", 180, StreamUtility},
      {4, "block locality", 10, BlockLocality},
      {5, "chernoff confidence planner", 300, ChernoffPlanner},
      {6, "amplification formula", 1, Amplification},
      {7, "sketch vs exact rank oracle", 60, SketchVsOracle},
      {8, "end-to-end quantiles and snapshots", 180, EndToEndQuantiles},
      {9, "memory structure", 60, MemoryStructure},
  };
  int failures = 0;
  std::vector<std::string> lines(10);
  for (const Criterion& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    const Verdict v = c.run();
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    const bool pass = v.pass && seconds < c.budget_seconds;
    failures += pass ? 0 : 1;
    lines[c.id] = absl::StrFormat("[%s] %d %s: %s (%.2fs, budget %.0fs)",
                                  pass ? "PASS" : "FAIL", c.id, c.name,
                                  v.detail, seconds, c.budget_seconds);
    std::printf("%s\n", lines[c.id].c_str());
    std::fflush(stdout);
  }
  const bool composition_ok = ledger.violations == 0 && ledger.checks > 0;
  failures += composition_ok ? 0 : 1;
  std::printf("[%s] 2 composition inequality: %lld violations in %lld checked "
              "runs (stream error <= max block error + 1e-9)\n",
              composition_ok ? "PASS" : "FAIL",
              static_cast<long long>(ledger.violations),
              static_cast<long long>(ledger.checks));
  std::printf("%s: %d criteria failed\n", failures == 0 ? "OK" : "FAILED",
              failures);
  return failures == 0 ? 0 : 1;
}

}  // namespace
}  // namespace streamsan

int main() { return streamsan::Main(); }
