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

// Monte Carlo evaluation harness: repeated seeded pipeline runs on a fixed
// input, block-size calibration tables, and synthetic workloads.

#ifndef STREAMSAN_EVALUATION_H_
#define STREAMSAN_EVALUATION_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "streamsan/core.h"
#include "streamsan/pipeline.h"

namespace streamsan {

// Half of the items (in expectation) on `heavy`, the rest uniform over the
// universe.
std::vector<Index> SkewedStream(int64_t length, uint32_t universe_size,
                                Index heavy, uint64_t seed);

std::vector<Index> UniformStream(int64_t length, uint32_t universe_size,
                                 uint64_t seed);

struct TrialOutcome {
  uint64_t seed = 0;
  double stream_error = 0;
  double stream_error_vs_original = 0;
  double max_block_error = 0;
  int64_t blocks = 0;
  // Full-size blocks whose error exceeded alpha. A sanitized partial block
  // is excluded, its guarantee being weaker.
  int64_t failed_blocks = 0;
  int64_t full_blocks = 0;
  double max_quantile_error = 0;
  double max_snapshot_quantile_error = 0;
  bool composition_holds = true;
};

struct EvalSummary {
  int64_t trials = 0;
  int64_t block_size = 0;
  double alpha = 0;
  double beta = 0;
  double quantile_tolerance = 0;
  std::vector<TrialOutcome> outcomes;

  // {stream error vs original <= alpha}
  double success_rate = 0;
  double per_block_failure_rate = 0;
  // Trials in which more than 2*beta*k blocks failed, vs exp(-2 k beta^2).
  double chernoff_exceed_rate = 0;
  double chernoff_bound = 0;
  // Trials in which all blocks succeeded, vs 1 - min(1, k beta).
  double all_blocks_success_rate = 0;
  double union_bound = 0;
  // Final answers and every snapshot within quantile_tolerance.
  double quantile_success_rate = 0;
  bool composition_holds = true;
};

// Runs the pipeline `trials` times over `input` with seeds seed + t. Trials
// are independent and may run on up to `threads` threads (0 = hardware
// concurrency); the result does not depend on the thread count.
// quantile_tolerance < 0 selects alpha + sketch_alpha + 0.01.
absl::StatusOr<EvalSummary> EvalUtility(const PipelineConfig& config,
                                        std::span<const Index> input,
                                        int64_t trials, int threads = 0,
                                        double quantile_tolerance = -1);

nlohmann::json EvalSummaryToJson(const EvalSummary& summary);

struct CalibrationRow {
  int64_t block_size = 0;
  double failure_rate = 0;
  double mean_error = 0;
};

struct CalibrationTable {
  int64_t n_min = 0;
  double constant = 0;
  int64_t trials = 0;
  std::vector<CalibrationRow> rows;
};

// Evaluates the calibration formula and measures the empirical failure rate
// {kolmogorov_error(D, D') > alpha} of the block sanitizer on a skewed block
// at n_min/4, n_min/2, n_min and 2 n_min.
CalibrationTable Calibrate(const AccuracyParams& accuracy, double epsilon,
                           const Domain& domain, int64_t trials,
                           uint64_t seed, int threads = 0);

nlohmann::json CalibrationToJson(const CalibrationTable& table);

// Calls fn(i) for i in [0, count) on a small pool of threads.
template <typename Fn>
void ParallelFor(int64_t count, int threads, Fn&& fn);

}  // namespace streamsan

#include "streamsan/internal/parallel.h"

#endif  // STREAMSAN_EVALUATION_H_
