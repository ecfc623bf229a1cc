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

// Domain model and exact (non-private) oracles over a finite ordered
// universe {0, ..., U-1}.
//
// The predicate class is the set of threshold functions c_x(y) = [x <= y].
// Ranks follow the usual strict convention: rank(x) counts items y < x, so
// the threshold average at x equals 1 - rank(x) / |D|.

#ifndef STREAMSAN_CORE_H_
#define STREAMSAN_CORE_H_

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"

namespace streamsan {

// A position in the universe {0, ..., U-1}.
using Index = uint32_t;

// A dataset of domain indices. The unit the offline sanitizer consumes and
// produces.
using Block = std::vector<Index>;

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

// Finite ordered universe of size U together with a uniform grid over the raw
// interval [lo, hi].
class Domain {
 public:
  static absl::StatusOr<Domain> Create(uint32_t universe_size, double lo,
                                       double hi);

  // Convenience for index-only domains: raw values coincide with indices.
  static absl::StatusOr<Domain> OfSize(uint32_t universe_size) {
    return Create(universe_size, 0.0, static_cast<double>(universe_size));
  }

  uint32_t universe_size() const { return universe_size_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }

  bool Contains(Index x) const { return x < universe_size_; }

  // Lower raw bound of the bucket for `x`.
  double BucketLowerBound(Index x) const;

  // Number of levels of the dyadic tree over this domain: ceil(log2 U) + 1.
  int TreeLevels() const;

  friend bool operator==(const Domain&, const Domain&) = default;

 private:
  Domain(uint32_t universe_size, double lo, double hi)
      : universe_size_(universe_size), lo_(lo), hi_(hi) {}

  uint32_t universe_size_;
  double lo_;
  double hi_;
};

struct PrivacyParams {
  // Positive; infinity selects the noiseless test mode.
  double epsilon = 1.0;
  double delta = 0.0;

  static absl::StatusOr<PrivacyParams> Create(double epsilon, double delta);

  bool noiseless() const { return epsilon == kNoiseless; }
};

struct AccuracyParams {
  double alpha = 0.05;
  double beta = 0.05;

  static absl::StatusOr<AccuracyParams> Create(double alpha, double beta);
};

enum class QuantizeMode {
  kStrict,  // out-of-range values are an error
  kClamp,   // out-of-range values are clamped to the nearest boundary
};

// Maps a raw value onto the grid: floor(U * (v - lo) / (hi - lo)), clamped to
// [0, U-1]. Monotone in `v`.
absl::StatusOr<Index> Quantize(double value, const Domain& domain,
                               QuantizeMode mode = QuantizeMode::kStrict);

// c_x(y): 1 iff x <= y.
inline int ThresholdEval(Index x, Index y) { return x <= y ? 1 : 0; }

// Fraction of `data` satisfying c_x. Errors on empty input.
absl::StatusOr<double> PredicateAverage(std::span<const Index> data, Index x);

// Number of items strictly below `x`.
int64_t ExactRank(std::span<const Index> data, Index x);

// Maximum over all thresholds of the difference in predicate averages, i.e.
// the sup-distance between the two empirical CDFs. Runs in O(|a| + |b| + U).
absl::StatusOr<double> KolmogorovError(std::span<const Index> a,
                                       std::span<const Index> b,
                                       uint32_t universe_size);

// Same quantity from two per-value count vectors of equal length. Both must
// have a positive total.
double KolmogorovErrorFromCounts(std::span<const uint64_t> a,
                                 std::span<const uint64_t> b);

}  // namespace streamsan

#endif  // STREAMSAN_CORE_H_
