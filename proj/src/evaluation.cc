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

#include "streamsan/evaluation.h"

#include <algorithm>
#include <cmath>
#include <mutex>

#include "streamsan/offline_sanitizer.h"
#include "streamsan/random.h"

namespace streamsan {

std::vector<Index> SkewedStream(int64_t length, uint32_t universe_size,
                                Index heavy, uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> out(static_cast<size_t>(length));
  for (Index& y : out) {
    const bool on_heavy = rng.Bit();
    const auto uniform = static_cast<Index>(rng.Uniform() * universe_size);
    y = on_heavy ? heavy : uniform;
  }
  return out;
}

std::vector<Index> UniformStream(int64_t length, uint32_t universe_size,
                                 uint64_t seed) {
  Rng rng(seed);
  std::vector<Index> out(static_cast<size_t>(length));
  for (Index& y : out) y = static_cast<Index>(rng.Uniform() * universe_size);
  return out;
}

absl::StatusOr<EvalSummary> EvalUtility(const PipelineConfig& config,
                                        std::span<const Index> input,
                                        int64_t trials, int threads,
                                        double quantile_tolerance) {
  if (trials < 1) return absl::InvalidArgumentError("trials must be >= 1");
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  absl::StatusOr<int64_t> block_size = ResolveBlockSize(config);
  if (!block_size.ok()) return block_size.status();

  const double alpha = config.stream.accuracy.alpha;
  const double beta = config.stream.accuracy.beta;
  EvalSummary summary;
  summary.trials = trials;
  summary.block_size = *block_size;
  summary.alpha = alpha;
  summary.beta = beta;
  summary.quantile_tolerance = quantile_tolerance >= 0
                                   ? quantile_tolerance
                                   : alpha + config.sketch_alpha + 0.01;
  summary.outcomes.resize(static_cast<size_t>(trials));

  std::mutex error_mu;
  absl::Status first_error;
  ParallelFor(trials, threads, [&](int64_t t) {
    PipelineConfig trial_config = config;
    trial_config.stream.seed = config.stream.seed + static_cast<uint64_t>(t);
    auto record_error = [&](const absl::Status& status) {
      std::lock_guard<std::mutex> lock(error_mu);
      if (first_error.ok()) first_error = status;
    };
    absl::StatusOr<Pipeline> pipeline = Pipeline::Create(trial_config, nullptr);
    if (!pipeline.ok()) return record_error(pipeline.status());
    for (Index y : input) pipeline->Push(y);
    absl::StatusOr<PipelineResult> result = pipeline->Finish();
    if (!result.ok()) return record_error(result.status());
    TrialOutcome& o = summary.outcomes[static_cast<size_t>(t)];
    o.seed = trial_config.stream.seed;
    o.stream_error = result->stream_error;
    o.stream_error_vs_original = result->stream_error_vs_original;
    o.max_block_error = result->max_block_error;
    o.blocks = result->blocks;
    o.composition_holds = result->composition_holds;
    const size_t full = result->block_errors.size() -
                        (result->partial_block_size.has_value() ? 1 : 0);
    o.full_blocks = static_cast<int64_t>(full);
    for (size_t j = 0; j < full; ++j) {
      if (result->block_errors[j] > alpha) ++o.failed_blocks;
    }
    for (const QuantileAnswer& a : result->quantiles) {
      o.max_quantile_error = std::max(o.max_quantile_error, a.rank_error);
    }
    for (const Snapshot& s : result->snapshots) {
      for (const QuantileAnswer& a : s.quantiles) {
        o.max_snapshot_quantile_error =
            std::max(o.max_snapshot_quantile_error, a.rank_error);
      }
    }
  });
  if (!first_error.ok()) return first_error;

  int64_t successes = 0;
  int64_t failed_blocks = 0;
  int64_t total_blocks = 0;
  int64_t chernoff_exceed = 0;
  int64_t all_blocks_ok = 0;
  int64_t quantile_ok = 0;
  for (const TrialOutcome& o : summary.outcomes) {
    if (o.stream_error_vs_original <= alpha) ++successes;
    failed_blocks += o.failed_blocks;
    total_blocks += o.full_blocks;
    if (static_cast<double>(o.failed_blocks) >
        2 * beta * static_cast<double>(o.full_blocks)) {
      ++chernoff_exceed;
    }
    if (o.failed_blocks == 0) ++all_blocks_ok;
    if (std::max(o.max_quantile_error, o.max_snapshot_quantile_error) <=
        summary.quantile_tolerance) {
      ++quantile_ok;
    }
    summary.composition_holds = summary.composition_holds && o.composition_holds;
  }
  const auto n = static_cast<double>(trials);
  summary.success_rate = successes / n;
  summary.per_block_failure_rate =
      total_blocks == 0 ? 0.0
                        : static_cast<double>(failed_blocks) /
                              static_cast<double>(total_blocks);
  summary.chernoff_exceed_rate = chernoff_exceed / n;
  summary.all_blocks_success_rate = all_blocks_ok / n;
  summary.quantile_success_rate = quantile_ok / n;
  // k varies across trials only under subsampling; use the mean.
  const int64_t k = total_blocks / trials;
  AccuracyParams accuracy = config.stream.accuracy;
  summary.chernoff_bound =
      ComputeConfidenceBound(k, accuracy, ConfidenceMode::kChernoff)
          .failure_probability;
  summary.union_bound =
      ComputeConfidenceBound(k, accuracy, ConfidenceMode::kUnion)
          .failure_probability;
  return summary;
}

nlohmann::json EvalSummaryToJson(const EvalSummary& s) {
  nlohmann::json trials = nlohmann::json::array();
  for (const TrialOutcome& o : s.outcomes) {
    trials.push_back({{"seed", o.seed},
                      {"stream_error", o.stream_error},
                      {"stream_error_vs_original", o.stream_error_vs_original},
                      {"max_block_error", o.max_block_error},
                      {"blocks", o.blocks},
                      {"failed_blocks", o.failed_blocks},
                      {"max_quantile_error", o.max_quantile_error},
                      {"max_snapshot_quantile_error",
                       o.max_snapshot_quantile_error},
                      {"composition_holds", o.composition_holds}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"trials", s.trials},
          {"block_size", s.block_size},
          {"alpha", s.alpha},
          {"beta", s.beta},
          {"success_rate", s.success_rate},
          {"per_block_failure_rate", s.per_block_failure_rate},
          {"union",
           {{"all_blocks_success_rate", s.all_blocks_success_rate},
            {"failure_bound", s.union_bound}}},
          {"chernoff",
           {{"exceed_rate", s.chernoff_exceed_rate},
            {"bound", s.chernoff_bound}}},
          {"quantile_tolerance", s.quantile_tolerance},
          {"quantile_success_rate", s.quantile_success_rate},
          {"composition_holds", s.composition_holds},
          {"per_trial", trials}};
}

CalibrationTable Calibrate(const AccuracyParams& accuracy, double epsilon,
                           const Domain& domain, int64_t trials,
                           uint64_t seed, int threads) {
  CalibrationTable table;
  table.n_min = CalibrateBlockSize(accuracy, epsilon, domain);
  table.constant = kDefaultCalibrationConstant;
  table.trials = trials;
  const int64_t multipliers_num[] = {1, 1, 1, 2};
  const int64_t multipliers_den[] = {4, 2, 1, 1};
  for (int i = 0; i < 4; ++i) {
    CalibrationRow row;
    row.block_size =
        std::max<int64_t>(1, table.n_min * multipliers_num[i] /
                                 multipliers_den[i]);
    const std::vector<Index> block =
        SkewedStream(row.block_size, domain.universe_size(),
                     domain.universe_size() / 2, MixSeed(seed, 1000 + i));
    std::vector<double> errors(static_cast<size_t>(trials), 0.0);
    ParallelFor(trials, threads, [&](int64_t t) {
      Rng rng(MixSeed(seed, static_cast<uint64_t>(t)));
      const Block out = *SanitizeBlock(block, domain, epsilon, rng);
      errors[static_cast<size_t>(t)] =
          *KolmogorovError(block, out, domain.universe_size());
    });
    int64_t failures = 0;
    double sum = 0;
    for (double e : errors) {
      if (e > accuracy.alpha) ++failures;
      sum += e;
    }
    row.failure_rate = trials > 0 ? static_cast<double>(failures) / trials : 0;
    row.mean_error = trials > 0 ? sum / trials : 0;
    table.rows.push_back(row);
  }
  return table;
}

nlohmann::json CalibrationToJson(const CalibrationTable& table) {
  nlohmann::json rows = nlohmann::json::array();
  for (const CalibrationRow& r : table.rows) {
    rows.push_back({{"block_size", r.block_size},
                    {"failure_rate", r.failure_rate},
                    {"mean_error", r.mean_error}});
  }
  return {{"schema_version", kReportSchemaVersion},
          {"n_min", table.n_min},
          {"constant", table.constant},
          {"trials", table.trials},
          {"rows", rows}};
}

}  // namespace streamsan
