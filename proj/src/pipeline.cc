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

#include "streamsan/pipeline.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"
#include "streamsan/offline_sanitizer.h"

namespace streamsan {

namespace {

// Blocks larger than this are refused by "auto".
constexpr int64_t kMaxAutoBlockSize = int64_t{1} << 31;

double MaxOf(const std::vector<double>& values) {
  double worst = 0;
  for (double v : values) worst = std::max(worst, v);
  return worst;
}

void WriteNumber(std::ostream& out, double value) {
  char buf[32];
  const auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  out.write(buf, end - buf);
}

}  // namespace

absl::Status PipelineConfig::Validate() const {
  StreamConfig check = stream;
  if (auto_block_size) check.block_size = 1;
  if (absl::Status s = check.Validate(); !s.ok()) return s;
  if (!(sketch_alpha > 0 && sketch_alpha < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("sketch alpha must lie in (0, 1), got ", sketch_alpha));
  }
  if (snapshot_every < 0) {
    return absl::InvalidArgumentError("snapshot cadence must be positive");
  }
  for (double q : quantiles) {
    if (!(q >= 0 && q <= 1)) {
      return absl::InvalidArgumentError(
          absl::StrCat("quantile must lie in [0, 1], got ", q));
    }
  }
  return absl::OkStatus();
}

absl::StatusOr<int64_t> ResolveBlockSize(const PipelineConfig& config) {
  if (!config.auto_block_size) return config.stream.block_size;
  const int64_t n = CalibrateBlockSize(
      config.stream.accuracy, config.stream.privacy.epsilon, config.domain);
  if (n > kMaxAutoBlockSize) {
    return absl::InvalidArgumentError(absl::StrCat(
        "auto block size infeasible: calibrated n = ", n, " exceeds ",
        kMaxAutoBlockSize));
  }
  return n;
}

double QuantileRankError(std::span<const uint64_t> counts, Index x,
                         double q) {
  uint64_t total = 0;
  uint64_t below = 0;
  for (size_t v = 0; v < counts.size(); ++v) {
    if (v < x) below += counts[v];
    total += counts[v];
  }
  if (total == 0) return 0;
  const uint64_t at_most = below + (x < counts.size() ? counts[x] : 0);
  const double n = static_cast<double>(total);
  const double low = static_cast<double>(below) / n;
  const double high = static_cast<double>(at_most) / n;
  return std::max({0.0, q - high, low - q});
}

Pipeline::Pipeline(const PipelineConfig& config, StreamSanitizer sanitizer,
                   QuantileSketch sketch, std::ostream* out)
    : config_(config),
      sanitizer_(std::move(sanitizer)),
      subsampler_(config.stream.subsample_rate,
                  DeriveSeed(config.stream.seed, SeedStream::kSubsampler)),
      sketch_(std::move(sketch)),
      out_(out),
      original_counts_(config.domain.universe_size(), 0),
      sampled_counts_(config.domain.universe_size(), 0),
      emitted_counts_(config.domain.universe_size(), 0) {
  sanitizer_.EnableErrorLog();
}

absl::StatusOr<Pipeline> Pipeline::Create(const PipelineConfig& config,
                                          std::ostream* sanitized_out) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  absl::StatusOr<int64_t> block_size = ResolveBlockSize(config);
  if (!block_size.ok()) return block_size.status();
  PipelineConfig resolved = config;
  resolved.stream.block_size = *block_size;
  resolved.auto_block_size = false;
  absl::StatusOr<StreamSanitizer> sanitizer =
      StreamSanitizer::Create(resolved.domain, resolved.stream);
  if (!sanitizer.ok()) return sanitizer.status();
  absl::StatusOr<QuantileSketch> sketch = QuantileSketch::Create(
      resolved.domain.universe_size(),
      QuantileSketch::CapacityForAccuracy(resolved.sketch_alpha),
      DeriveSeed(resolved.stream.seed, SeedStream::kSketch));
  if (!sketch.ok()) return sketch.status();
  return Pipeline(resolved, *std::move(sanitizer), *std::move(sketch),
                  sanitized_out);
}

void Pipeline::Push(Index item) {
  ++items_consumed_;
  ++original_counts_[item];
  if (!subsampler_.Keep()) return;
  ++items_sampled_;
  ++sampled_counts_[item];
  if (std::optional<Block> block = sanitizer_.Push(item)) {
    Consume(*block);
    if (config_.snapshot_every > 0 &&
        sanitizer_.blocks_emitted() % config_.snapshot_every == 0) {
      snapshots_.push_back(TakeSnapshot());
    }
  }
}

void Pipeline::Consume(const Block& block) {
  for (Index y : block) {
    ++emitted_counts_[y];
    sketch_.Update(y);
    if (out_ != nullptr) {
      if (config_.emit_indices) {
        *out_ << y;
      } else {
        WriteNumber(*out_, config_.domain.BucketLowerBound(y));
      }
      *out_ << '\n';
    }
  }
  items_emitted_ += static_cast<int64_t>(block.size());
  sketch_peak_stored_ = std::max(sketch_peak_stored_, sketch_.stored_items());
}

std::vector<QuantileAnswer> Pipeline::Answer() const {
  std::vector<QuantileAnswer> answers;
  for (double q : config_.quantiles) {
    QuantileAnswer a;
    a.q = q;
    a.index = *sketch_.QuantileQuery(q);
    a.value = config_.domain.BucketLowerBound(a.index);
    a.rank_error = QuantileRankError(original_counts_, a.index, q);
    answers.push_back(a);
  }
  return answers;
}

Snapshot Pipeline::TakeSnapshot() const {
  Snapshot s;
  s.blocks = sanitizer_.blocks_emitted();
  s.items_consumed = items_consumed_;
  s.items_emitted = items_emitted_;
  s.stream_error = KolmogorovErrorFromCounts(sampled_counts_, emitted_counts_);
  s.stream_error_vs_original =
      KolmogorovErrorFromCounts(original_counts_, emitted_counts_);
  s.max_block_error = MaxOf(sanitizer_.block_errors());
  s.composition_holds =
      s.stream_error <= s.max_block_error + kCompositionTolerance;
  s.quantiles = Answer();
  return s;
}

absl::StatusOr<PipelineResult> Pipeline::Finish() {
  if (items_consumed_ == 0) return absl::InvalidArgumentError("empty stream");
  absl::StatusOr<std::optional<Block>> tail = sanitizer_.Finish();
  if (!tail.ok()) return tail.status();
  if (tail->has_value()) Consume(**tail);
  if (items_emitted_ == 0) {
    return absl::InvalidArgumentError(
        "no items survived subsampling; nothing to sanitize");
  }

  PipelineResult r;
  r.block_size = sanitizer_.block_size();
  r.items_consumed = items_consumed_;
  r.items_sampled = items_sampled_;
  r.items_emitted = items_emitted_;
  r.blocks = sanitizer_.blocks_emitted();
  r.partial_block_size = sanitizer_.partial_block_size();
  r.block_errors = sanitizer_.block_errors();
  r.max_block_error = MaxOf(r.block_errors);
  r.stream_error = KolmogorovErrorFromCounts(sampled_counts_, emitted_counts_);
  r.stream_error_vs_original =
      KolmogorovErrorFromCounts(original_counts_, emitted_counts_);
  r.composition_holds =
      r.stream_error <= r.max_block_error + kCompositionTolerance;
  r.snapshots = snapshots_;
  for (const Snapshot& s : snapshots_) {
    r.composition_holds = r.composition_holds && s.composition_holds;
  }
  r.quantiles = Answer();

  r.privacy = AccountPrivacy(config_.stream);
  r.union_bound = ComputeConfidenceBound(r.blocks, config_.stream.accuracy,
                                         ConfidenceMode::kUnion);
  r.chernoff_bound = ComputeConfidenceBound(r.blocks, config_.stream.accuracy,
                                            ConfidenceMode::kChernoff);
  if (config_.stream.subsample_rate < 1.0) {
    r.minimum_stream_length = MinimumStreamLength(
        config_.stream.accuracy, config_.stream.subsample_rate);
    if (items_consumed_ < r.minimum_stream_length) {
      r.warnings.push_back(absl::StrCat(
          "stream of ", items_consumed_,
          " items is shorter than the ", r.minimum_stream_length,
          " needed for subsampling error <= alpha"));
    }
  }
  if (r.partial_block_size.has_value()) {
    r.warnings.push_back(absl::StrCat(
        "final block of ", *r.partial_block_size,
        " items sanitized as a partial block; its error guarantee is "
        "degraded by a factor of ",
        static_cast<double>(r.block_size) /
            static_cast<double>(*r.partial_block_size)));
  }

  r.peak_buffered = sanitizer_.peak_buffered();
  r.sketch_stored = sketch_.stored_items();
  r.sketch_peak_stored = sketch_peak_stored_;
  r.sketch_capacity = sketch_.capacity();
  r.sketch_storage_bound =
      QuantileSketch::StorageBound(sketch_.capacity(), sketch_.count());
  r.sketch_blob = sketch_.Serialize();
  return r;
}

namespace {

nlohmann::json AnswersToJson(const std::vector<QuantileAnswer>& answers) {
  nlohmann::json out = nlohmann::json::array();
  for (const QuantileAnswer& a : answers) {
    out.push_back({{"q", a.q},
                   {"index", a.index},
                   {"value", a.value},
                   {"rank_error", a.rank_error}});
  }
  return out;
}

nlohmann::json BoundToJson(const ConfidenceBound& b) {
  return {{"error_bound", b.error_bound},
          {"failure_probability", b.failure_probability}};
}

}  // namespace

nlohmann::json ReportToJson(const PipelineConfig& config,
                            const PipelineResult& r) {
  nlohmann::json snapshots = nlohmann::json::array();
  for (const Snapshot& s : r.snapshots) {
    snapshots.push_back({{"blocks", s.blocks},
                         {"items_consumed", s.items_consumed},
                         {"items_emitted", s.items_emitted},
                         {"stream_error", s.stream_error},
                         {"stream_error_vs_original",
                          s.stream_error_vs_original},
                         {"max_block_error", s.max_block_error},
                         {"composition_holds", s.composition_holds},
                         {"quantiles", AnswersToJson(s.quantiles)}});
  }
  const double epsilon = config.stream.privacy.epsilon;
  nlohmann::json report = {
      {"schema_version", kReportSchemaVersion},
      {"config",
       {{"universe", config.domain.universe_size()},
        {"lo", config.domain.lo()},
        {"hi", config.domain.hi()},
        {"epsilon", epsilon == kNoiseless ? nlohmann::json("inf")
                                          : nlohmann::json(epsilon)},
        {"delta", config.stream.privacy.delta},
        {"alpha", config.stream.accuracy.alpha},
        {"beta", config.stream.accuracy.beta},
        {"block_size", r.block_size},
        {"subsample_rate", config.stream.subsample_rate},
        {"seed", config.stream.seed},
        {"sketch_alpha", config.sketch_alpha},
        {"confidence_mode", ConfidenceModeName(config.confidence_mode)}}},
      {"items_consumed", r.items_consumed},
      {"items_sampled", r.items_sampled},
      {"items_emitted", r.items_emitted},
      {"blocks", r.blocks},
      {"partial_block_size", r.partial_block_size.has_value()
                                 ? nlohmann::json(*r.partial_block_size)
                                 : nlohmann::json(nullptr)},
      {"block_errors", r.block_errors},
      {"max_block_error", r.max_block_error},
      {"stream_error", r.stream_error},
      {"stream_error_vs_original", r.stream_error_vs_original},
      {"composition_holds", r.composition_holds},
      {"privacy",
       {{"epsilon", r.privacy.epsilon == kNoiseless
                        ? nlohmann::json("inf")
                        : nlohmann::json(r.privacy.epsilon)},
        {"delta", r.privacy.delta}}},
      {"confidence",
       {{"selected", ConfidenceModeName(config.confidence_mode)},
        {"union", BoundToJson(r.union_bound)},
        {"chernoff", BoundToJson(r.chernoff_bound)}}},
      {"minimum_stream_length", r.minimum_stream_length},
      {"quantiles", AnswersToJson(r.quantiles)},
      {"snapshots", snapshots},
      {"memory",
       {{"peak_buffered_items", r.peak_buffered},
        {"block_size", r.block_size},
        {"sketch_capacity", r.sketch_capacity},
        {"sketch_stored_items", r.sketch_stored},
        {"sketch_peak_stored_items", r.sketch_peak_stored},
        {"sketch_storage_bound", r.sketch_storage_bound}}},
      {"warnings", r.warnings},
  };
  return report;
}

}  // namespace streamsan
