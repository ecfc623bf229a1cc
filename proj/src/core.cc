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

#include "streamsan/core.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdlib>

#include "absl/strings/str_cat.h"

namespace streamsan {

absl::StatusOr<Domain> Domain::Create(uint32_t universe_size, double lo,
                                      double hi) {
  if (universe_size < 1) {
    return absl::InvalidArgumentError("universe size must be at least 1");
  }
  if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi)) {
    return absl::InvalidArgumentError(
        absl::StrCat("domain bounds must satisfy lo < hi, got lo=", lo,
                     " hi=", hi));
  }
  return Domain(universe_size, lo, hi);
}

double Domain::BucketLowerBound(Index x) const {
  return lo_ + (hi_ - lo_) * static_cast<double>(x) /
                   static_cast<double>(universe_size_);
}

int Domain::TreeLevels() const {
  // bit_width(U - 1) == ceil(log2 U) for U >= 1.
  return std::bit_width(universe_size_ - 1) + 1;
}

absl::StatusOr<PrivacyParams> PrivacyParams::Create(double epsilon,
                                                    double delta) {
  if (std::isnan(epsilon) || !(epsilon > 0)) {
    return absl::InvalidArgumentError(
        absl::StrCat("epsilon must be positive, got ", epsilon));
  }
  if (!(delta >= 0 && delta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("delta must lie in [0, 1), got ", delta));
  }
  return PrivacyParams{epsilon, delta};
}

absl::StatusOr<AccuracyParams> AccuracyParams::Create(double alpha,
                                                      double beta) {
  if (!(alpha > 0 && alpha < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("alpha must lie in (0, 1), got ", alpha));
  }
  if (!(beta > 0 && beta < 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("beta must lie in (0, 1), got ", beta));
  }
  return AccuracyParams{alpha, beta};
}

absl::StatusOr<Index> Quantize(double value, const Domain& domain,
                               QuantizeMode mode) {
  if (std::isnan(value)) {
    return absl::InvalidArgumentError("cannot quantize NaN");
  }
  if (mode == QuantizeMode::kStrict &&
      (value < domain.lo() || value > domain.hi())) {
    return absl::OutOfRangeError(absl::StrCat(
        "value ", value, " outside [", domain.lo(), ", ", domain.hi(), "]"));
  }
  const double u = static_cast<double>(domain.universe_size());
  const double scaled =
      std::floor(u * (value - domain.lo()) / (domain.hi() - domain.lo()));
  if (!(scaled > 0)) return Index{0};
  if (scaled >= u - 1) return static_cast<Index>(domain.universe_size() - 1);
  return static_cast<Index>(scaled);
}

absl::StatusOr<double> PredicateAverage(std::span<const Index> data,
                                        Index x) {
  if (data.empty()) return absl::InvalidArgumentError("empty dataset");
  const auto hits =
      std::count_if(data.begin(), data.end(), [x](Index y) { return x <= y; });
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

int64_t ExactRank(std::span<const Index> data, Index x) {
  return std::count_if(data.begin(), data.end(),
                       [x](Index y) { return y < x; });
}

namespace {

absl::StatusOr<std::vector<uint64_t>> Tally(std::span<const Index> data,
                                            uint32_t universe_size) {
  std::vector<uint64_t> counts(universe_size, 0);
  for (Index y : data) {
    if (y >= universe_size) {
      return absl::OutOfRangeError(absl::StrCat(
          "item ", y, " outside universe of size ", universe_size));
    }
    ++counts[y];
  }
  return counts;
}

}  // namespace

absl::StatusOr<double> KolmogorovError(std::span<const Index> a,
                                       std::span<const Index> b,
                                       uint32_t universe_size) {
  if (a.empty() || b.empty()) {
    return absl::InvalidArgumentError("empty dataset");
  }
  absl::StatusOr<std::vector<uint64_t>> counts_a = Tally(a, universe_size);
  if (!counts_a.ok()) return counts_a.status();
  absl::StatusOr<std::vector<uint64_t>> counts_b = Tally(b, universe_size);
  if (!counts_b.ok()) return counts_b.status();
  return KolmogorovErrorFromCounts(*counts_a, *counts_b);
}

double KolmogorovErrorFromCounts(std::span<const uint64_t> a,
                                 std::span<const uint64_t> b) {
  uint64_t total_a = 0;
  uint64_t total_b = 0;
  for (uint64_t c : a) total_a += c;
  for (uint64_t c : b) total_b += c;
  // Compare integer cross-products so identical distributions give exactly 0.
  const long double na = static_cast<long double>(total_a);
  const long double nb = static_cast<long double>(total_b);
  uint64_t below_a = 0;
  uint64_t below_b = 0;
  long double worst = 0;
  const size_t len = std::min(a.size(), b.size());
  for (size_t x = 0; x < len; ++x) {
    // Threshold at x: the averages differ by |rank_a/na - rank_b/nb|.
    const long double diff =
        std::abs(static_cast<long double>(below_a) * nb -
                 static_cast<long double>(below_b) * na);
    worst = std::max(worst, diff);
    below_a += a[x];
    below_b += b[x];
  }
  return static_cast<double>(worst / (na * nb));
}

}  // namespace streamsan
