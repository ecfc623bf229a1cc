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

#include "streamsan/stream_sanitizer.h"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "absl/strings/str_cat.h"
#include "streamsan/offline_sanitizer.h"

namespace streamsan {

absl::StatusOr<PartialBlockPolicy> ParsePartialBlockPolicy(
    std::string_view name) {
  if (name == "strict") return PartialBlockPolicy::kStrict;
  if (name == "sanitize" || name == "sanitize-partial") {
    return PartialBlockPolicy::kSanitizePartial;
  }
  return absl::InvalidArgumentError(
      absl::StrCat("unknown partial block policy '", std::string(name), "'"));
}

absl::Status StreamConfig::Validate() const {
  if (block_size < 1) {
    return absl::InvalidArgumentError("block size must be at least 1");
  }
  if (!(subsample_rate > 0 && subsample_rate <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsample rate must lie in (0, 1], got ",
                     subsample_rate));
  }
  if (absl::StatusOr<PrivacyParams> p =
          PrivacyParams::Create(privacy.epsilon, privacy.delta);
      !p.ok()) {
    return p.status();
  }
  if (absl::StatusOr<AccuracyParams> a =
          AccuracyParams::Create(accuracy.alpha, accuracy.beta);
      !a.ok()) {
    return a.status();
  }
  return absl::OkStatus();
}

StreamSanitizer::StreamSanitizer(const Domain& domain,
                                 const StreamConfig& config)
    : domain_(domain),
      block_size_(config.block_size),
      policy_(config.partial_block_policy),
      epsilon_(config.privacy.epsilon),
      rng_(DeriveSeed(config.seed, SeedStream::kSanitizer)) {
  buffer_.reserve(static_cast<size_t>(block_size_));
}

absl::StatusOr<StreamSanitizer> StreamSanitizer::Create(
    const Domain& domain, const StreamConfig& config) {
  if (absl::Status s = config.Validate(); !s.ok()) return s;
  return StreamSanitizer(domain, config);
}

Block StreamSanitizer::SanitizeBuffer() {
  absl::StatusOr<Block> out = SanitizeBlock(buffer_, domain_, epsilon_, rng_);
  // Items are range-checked on entry, so only an empty buffer could fail.
  assert(out.ok());
  if (log_errors_) {
    block_errors_.push_back(
        *KolmogorovError(buffer_, *out, domain_.universe_size()));
  }
  buffer_.clear();
  ++blocks_emitted_;
  return *std::move(out);
}

std::optional<Block> StreamSanitizer::Push(Index item) {
  assert(domain_.Contains(item));
  buffer_.push_back(item);
  ++items_consumed_;
  peak_buffered_ = std::max(peak_buffered_, buffer_.size());
  if (static_cast<int64_t>(buffer_.size()) < block_size_) return std::nullopt;
  return SanitizeBuffer();
}

absl::StatusOr<std::optional<Block>> StreamSanitizer::Finish() {
  if (buffer_.empty()) return std::nullopt;
  if (policy_ == PartialBlockPolicy::kStrict) {
    return absl::FailedPreconditionError(absl::StrCat(
        "stream length not a multiple of block size (", buffer_.size(),
        " items left over with block size ", block_size_, ")"));
  }
  partial_block_size_ = buffer_.size();
  return std::optional<Block>(SanitizeBuffer());
}

std::vector<Index> SubsampleStream(std::span<const Index> stream, double rate,
                                   Rng& rng) {
  std::vector<Index> out;
  for (Index y : stream) {
    if (rng.Bernoulli(rate)) out.push_back(y);
  }
  return out;
}

absl::StatusOr<PrivacyParams> AmplifiedPrivacy(double epsilon0, double delta0,
                                               double rate) {
  if (!(rate > 0 && rate <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("subsample rate must lie in (0, 1], got ", rate));
  }
  if (!(epsilon0 > 0)) {
    return absl::InvalidArgumentError("epsilon must be positive");
  }
  if (rate == 1.0) return PrivacyParams{epsilon0, delta0};
  return PrivacyParams{std::log1p(rate * std::expm1(epsilon0)),
                       rate * delta0};
}

PrivacyParams AccountPrivacy(const StreamConfig& config) {
  if (config.subsample_rate >= 1.0) return config.privacy;
  return *AmplifiedPrivacy(config.privacy.epsilon, config.privacy.delta,
                           config.subsample_rate);
}

absl::StatusOr<ConfidenceMode> ParseConfidenceMode(std::string_view name) {
  if (name == "union") return ConfidenceMode::kUnion;
  if (name == "chernoff") return ConfidenceMode::kChernoff;
  return absl::InvalidArgumentError(
      absl::StrCat("unknown confidence mode '", std::string(name), "'"));
}

std::string_view ConfidenceModeName(ConfidenceMode mode) {
  return mode == ConfidenceMode::kUnion ? "union" : "chernoff";
}

ConfidenceBound ComputeConfidenceBound(int64_t blocks,
                                       const AccuracyParams& accuracy,
                                       ConfidenceMode mode) {
  const double k = static_cast<double>(blocks);
  switch (mode) {
    case ConfidenceMode::kUnion:
      return {accuracy.alpha, std::min(1.0, k * accuracy.beta)};
    case ConfidenceMode::kChernoff:
      return {accuracy.alpha + 2 * accuracy.beta,
              std::exp(-2.0 * k * accuracy.beta * accuracy.beta)};
  }
  return {accuracy.alpha, 1.0};
}

int64_t MinimumStreamLength(const AccuracyParams& accuracy, double rate,
                            double constant) {
  return static_cast<int64_t>(
      std::ceil(constant / (accuracy.alpha * accuracy.alpha * rate)));
}

}  // namespace streamsan
