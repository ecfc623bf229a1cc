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

// Streaming sanitizer built from the offline block sanitizer.
//
// The stream is cut into consecutive disjoint blocks of n items. Each full
// block is handed to SanitizeBlock and the synthetic block is emitted in its
// place. Because the blocks are disjoint, every input item influences exactly
// one invocation of the mechanism, so the stream output inherits the block
// mechanism's (epsilon, delta) unchanged. Only the current block is retained.
//
// Optional Bernoulli subsampling happens before chunking and is accounted for
// with the standard amplification bound.

#ifndef STREAMSAN_STREAM_SANITIZER_H_
#define STREAMSAN_STREAM_SANITIZER_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "streamsan/core.h"
#include "streamsan/random.h"

namespace streamsan {

enum class PartialBlockPolicy {
  kStrict,           // a trailing partial block is an error
  kSanitizePartial,  // sanitize the residual as a smaller block
};

absl::StatusOr<PartialBlockPolicy> ParsePartialBlockPolicy(
    std::string_view name);

struct StreamConfig {
  int64_t block_size = 1;
  PartialBlockPolicy partial_block_policy = PartialBlockPolicy::kStrict;
  // Probability of keeping each input item, in (0, 1].
  double subsample_rate = 1.0;
  // Budget of the block sanitizer.
  PrivacyParams privacy;
  AccuracyParams accuracy;
  uint64_t seed = 0;

  absl::Status Validate() const;
};

// Independent sub-seeds derived from StreamConfig::seed.
enum class SeedStream : uint64_t { kSanitizer = 0, kSubsampler = 1, kSketch = 2 };

inline uint64_t DeriveSeed(uint64_t seed, SeedStream stream) {
  return MixSeed(seed, static_cast<uint64_t>(stream));
}

class StreamSanitizer {
 public:
  static absl::StatusOr<StreamSanitizer> Create(const Domain& domain,
                                                const StreamConfig& config);

  // Appends `item` (which must lie in the domain). When the buffer reaches the
  // block size, sanitizes it, clears it and returns the synthetic block.
  std::optional<Block> Push(Index item);

  // Handles the residual buffer at end of stream according to the partial
  // block policy.
  absl::StatusOr<std::optional<Block>> Finish();

  // Records kolmogorov_error(D_j, D'_j) for every emitted block. Costs O(U)
  // per block.
  void EnableErrorLog() { log_errors_ = true; }
  const std::vector<double>& block_errors() const { return block_errors_; }

  int64_t blocks_emitted() const { return blocks_emitted_; }
  int64_t items_consumed() const { return items_consumed_; }
  size_t buffered() const { return buffer_.size(); }
  size_t peak_buffered() const { return peak_buffered_; }
  int64_t block_size() const { return block_size_; }

  // Size n' of the residual block sanitized by Finish(), if any. Its error
  // guarantee is degraded by a factor n / n'.
  std::optional<size_t> partial_block_size() const {
    return partial_block_size_;
  }

 private:
  StreamSanitizer(const Domain& domain, const StreamConfig& config);

  Block SanitizeBuffer();

  Domain domain_;
  int64_t block_size_;
  PartialBlockPolicy policy_;
  double epsilon_;
  Rng rng_;
  Block buffer_;
  int64_t blocks_emitted_ = 0;
  int64_t items_consumed_ = 0;
  size_t peak_buffered_ = 0;
  bool log_errors_ = false;
  std::vector<double> block_errors_;
  std::optional<size_t> partial_block_size_;
};

// Keeps each item independently with probability `rate`.
class Subsampler {
 public:
  Subsampler(double rate, uint64_t seed) : rate_(rate), rng_(seed) {}

  bool Keep() { return rate_ >= 1.0 || rng_.Bernoulli(rate_); }

 private:
  double rate_;
  Rng rng_;
};

// Order-preserving Bernoulli(rate) subsample of `stream`.
std::vector<Index> SubsampleStream(std::span<const Index> stream, double rate,
                                   Rng& rng);

// Privacy of an (epsilon0, delta0)-DP mechanism run on a Bernoulli(rate)
// subsample: epsilon' = ln(1 + rate * (e^epsilon0 - 1)), delta' = rate *
// delta0. Errors if rate is not in (0, 1].
absl::StatusOr<PrivacyParams> AmplifiedPrivacy(double epsilon0, double delta0,
                                               double rate);

// End-to-end guarantee of the stream sanitizer: the block budget for rate 1
// (parallel composition over disjoint blocks), otherwise the amplified budget.
PrivacyParams AccountPrivacy(const StreamConfig& config);

enum class ConfidenceMode {
  kUnion,     // every block succeeds: (alpha, min(1, k * beta))
  kChernoff,  // at most a 2*beta fraction fails: (alpha + 2*beta,
              // exp(-2 k beta^2)) by Hoeffding
};

absl::StatusOr<ConfidenceMode> ParseConfidenceMode(std::string_view name);
std::string_view ConfidenceModeName(ConfidenceMode mode);

struct ConfidenceBound {
  double error_bound;
  double failure_probability;
};

ConfidenceBound ComputeConfidenceBound(int64_t blocks,
                                       const AccuracyParams& accuracy,
                                       ConfidenceMode mode);

inline constexpr double kDefaultSamplingConstant = 8.0;

// ceil(c0 / (alpha^2 * rate)): the stream length below which subsampling at
// `rate` may add more than alpha of sampling error.
int64_t MinimumStreamLength(const AccuracyParams& accuracy, double rate,
                            double constant = kDefaultSamplingConstant);

}  // namespace streamsan

#endif  // STREAMSAN_STREAM_SANITIZER_H_
