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

// An (epsilon, 0)-differentially-private offline sanitizer for threshold
// predicates over one block of n items.
//
// The block is tallied into a dyadic tree over the (padded) universe, every
// tree node receives Laplace noise of scale L / epsilon, the noisy prefix
// counts are projected onto a valid integer CDF, and a synthetic block of
// exactly n items is read off that CDF. An item contributes to exactly one
// node per level, so splitting the budget evenly over the L levels gives
// epsilon-DP for the whole tree; everything downstream of the noisy tree is
// post-processing.

#ifndef STREAMSAN_OFFLINE_SANITIZER_H_
#define STREAMSAN_OFFLINE_SANITIZER_H_

#include <cstdint>
#include <span>
#include <vector>

#include "absl/status/statusor.h"
#include "streamsan/core.h"
#include "streamsan/random.h"

namespace streamsan {

// counts[v] = multiplicity of v in `block`. Items must lie in the domain.
std::vector<uint64_t> BuildHistogram(std::span<const Index> block,
                                     const Domain& domain);

// Complete binary tree of range counts over [0, 2^(L-1)). Level 0 is the
// root; level l has 2^l nodes, node j of level l covers
// [j * 2^(L-1-l), (j+1) * 2^(L-1-l)). Leaves past U - 1 are padding.
class DyadicTree {
 public:
  static DyadicTree FromHistogram(std::span<const uint64_t> counts,
                                  const Domain& domain);

  int levels() const { return levels_; }
  uint32_t universe_size() const { return universe_size_; }
  size_t node_count() const { return nodes_.size(); }

  double node(int level, size_t offset) const {
    return nodes_[NodeId(level, offset)];
  }

  // Sum of node counts over the dyadic decomposition of [0, x]. Touches at
  // most `levels()` nodes.
  double Prefix(Index x) const;

  // All prefixes 0..U-1.
  std::vector<double> AllPrefixes() const;

  // Adds independent Laplace(levels / epsilon) noise to every node. Noise is
  // drawn for a fixed number of nodes, in a fixed order, regardless of the
  // counts. epsilon = infinity leaves the tree unchanged and draws nothing.
  void AddNoise(double epsilon, Rng& rng);

  double NoiseScale(double epsilon) const;

 private:
  DyadicTree(int levels, uint32_t universe_size)
      : levels_(levels),
        universe_size_(universe_size),
        nodes_((size_t{1} << levels) - 1, 0.0) {}

  // Heap layout: root at 0, children of i at 2i+1 and 2i+2.
  static size_t NodeId(int level, size_t offset) {
    return (size_t{1} << level) - 1 + offset;
  }

  int levels_;
  uint32_t universe_size_;
  std::vector<double> nodes_;
};

// Monotone integer CDF with F[U-1] = n.
struct NoisyCdf {
  std::vector<uint64_t> values;

  uint64_t total() const { return values.empty() ? 0 : values.back(); }
};

// Round to nearest, clamp to [0, n], running maximum, then pin the last entry
// to n.
NoisyCdf ConsistentCdf(std::span<const double> prefixes, uint64_t n);

// Emits F[v] - F[v-1] copies of v in ascending order.
Block Synthesize(const NoisyCdf& cdf);

// The full mechanism. Output has exactly |block| items. Errors on an empty
// block or an out-of-domain item.
absl::StatusOr<Block> SanitizeBlock(std::span<const Index> block,
                                    const Domain& domain, double epsilon,
                                    Rng& rng);

inline constexpr double kDefaultCalibrationConstant = 2.0;

// Smallest block size for which the mechanism is expected to meet (alpha,
// beta) on every threshold simultaneously:
//
//   n_min = ceil(C * L^1.5 * sqrt(2 ln(2U / beta)) / (alpha * epsilon))
//
// L^1.5 / epsilon is the standard deviation scale of a prefix assembled from
// up to L nodes, and the square-root term is a union bound over the U
// thresholds. C is validated by Monte Carlo (see the calibrate subcommand).
// Returns 1 in noiseless mode.
int64_t CalibrateBlockSize(const AccuracyParams& accuracy, double epsilon,
                           const Domain& domain,
                           double constant = kDefaultCalibrationConstant);

// The alpha that `CalibrateBlockSize` would certify at block size n, i.e. the
// formula solved for alpha.
double CalibratedAlpha(int64_t block_size, double beta, double epsilon,
                       const Domain& domain,
                       double constant = kDefaultCalibrationConstant);

}  // namespace streamsan

#endif  // STREAMSAN_OFFLINE_SANITIZER_H_
