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

// Subsample -> sanitize -> sketch pipeline with continual quantile snapshots
// and exact evaluation counters.
//
// Only O(U) state is kept besides the sanitizer's single block buffer: count
// vectors of the original, subsampled and sanitized streams, which are enough
// to evaluate every threshold and rank exactly.

#ifndef STREAMSAN_PIPELINE_H_
#define STREAMSAN_PIPELINE_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "absl/status/statusor.h"
#include "json.hpp"
#include "streamsan/core.h"
#include "streamsan/quantile_sketch.h"
#include "streamsan/stream_sanitizer.h"

namespace streamsan {

inline constexpr int kReportSchemaVersion = 1;
// Slack allowed when checking stream error <= max block error.
inline constexpr double kCompositionTolerance = 1e-9;

struct PipelineConfig {
  PipelineConfig(const Domain& d) : domain(d) {}  // NOLINT

  Domain domain;
  // stream.block_size is ignored when auto_block_size is set.
  StreamConfig stream;
  bool auto_block_size = false;
  double sketch_alpha = 0.01;
  // Snapshot every this many emitted blocks; 0 disables snapshots.
  int64_t snapshot_every = 0;
  std::vector<double> quantiles = {0.1, 0.25, 0.5, 0.75, 0.9};
  ConfidenceMode confidence_mode = ConfidenceMode::kUnion;
  // Write indices instead of bucket lower bounds to the sanitized stream.
  bool emit_indices = false;

  absl::Status Validate() const;
};

// Resolves "auto" to CalibrateBlockSize; fails if the result is absurdly
// large for the configured parameters.
absl::StatusOr<int64_t> ResolveBlockSize(const PipelineConfig& config);

struct QuantileAnswer {
  double q = 0;
  Index index = 0;
  double value = 0;
  // Distance from q to the normalized rank interval of `index` in the
  // original stream.
  double rank_error = 0;
};

struct Snapshot {
  int64_t blocks = 0;
  int64_t items_consumed = 0;
  int64_t items_emitted = 0;
  double stream_error = 0;
  double stream_error_vs_original = 0;
  double max_block_error = 0;
  bool composition_holds = true;
  std::vector<QuantileAnswer> quantiles;
};

struct PipelineResult {
  int64_t block_size = 0;
  int64_t items_consumed = 0;
  int64_t items_sampled = 0;
  int64_t items_emitted = 0;
  int64_t blocks = 0;
  std::optional<size_t> partial_block_size;

  std::vector<double> block_errors;
  double max_block_error = 0;
  // Sanitized stream vs the (subsampled) stream that was chunked.
  double stream_error = 0;
  // Sanitized stream vs the original input.
  double stream_error_vs_original = 0;
  // stream_error <= max_block_error + tolerance, here and at every snapshot.
  bool composition_holds = true;

  std::vector<QuantileAnswer> quantiles;
  std::vector<Snapshot> snapshots;

  PrivacyParams privacy;
  ConfidenceBound union_bound{};
  ConfidenceBound chernoff_bound{};
  int64_t minimum_stream_length = 0;
  std::vector<std::string> warnings;

  size_t peak_buffered = 0;
  size_t sketch_stored = 0;
  size_t sketch_peak_stored = 0;
  uint64_t sketch_storage_bound = 0;
  uint32_t sketch_capacity = 0;
  std::string sketch_blob;
};

// Rank error of answering q with `x` against a per-value count vector.
double QuantileRankError(std::span<const uint64_t> counts, Index x, double q);

class Pipeline {
 public:
  // `sanitized_out` may be null. It receives one line per sanitized item.
  static absl::StatusOr<Pipeline> Create(const PipelineConfig& config,
                                         std::ostream* sanitized_out);

  // One original-stream item.
  void Push(Index item);

  absl::StatusOr<PipelineResult> Finish();

  const StreamSanitizer& sanitizer() const { return sanitizer_; }
  const QuantileSketch& sketch() const { return sketch_; }

 private:
  Pipeline(const PipelineConfig& config, StreamSanitizer sanitizer,
           QuantileSketch sketch, std::ostream* out);

  void Consume(const Block& block);
  std::vector<QuantileAnswer> Answer() const;
  Snapshot TakeSnapshot() const;

  PipelineConfig config_;
  StreamSanitizer sanitizer_;
  Subsampler subsampler_;
  QuantileSketch sketch_;
  std::ostream* out_;
  std::vector<uint64_t> original_counts_;
  std::vector<uint64_t> sampled_counts_;
  std::vector<uint64_t> emitted_counts_;
  int64_t items_consumed_ = 0;
  int64_t items_sampled_ = 0;
  int64_t items_emitted_ = 0;
  size_t sketch_peak_stored_ = 0;
  std::vector<Snapshot> snapshots_;
};

nlohmann::json ReportToJson(const PipelineConfig& config,
                            const PipelineResult& result);

}  // namespace streamsan

#endif  // STREAMSAN_PIPELINE_H_
