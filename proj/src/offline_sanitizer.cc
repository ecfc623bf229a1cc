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

#include "streamsan/offline_sanitizer.h"

#include <algorithm>
#include <cmath>

#include "absl/strings/str_cat.h"

namespace streamsan {

std::vector<uint64_t> BuildHistogram(std::span<const Index> block,
                                     const Domain& domain) {
  std::vector<uint64_t> counts(domain.universe_size(), 0);
  for (Index y : block) ++counts[y];
  return counts;
}

DyadicTree DyadicTree::FromHistogram(std::span<const uint64_t> counts,
                                     const Domain& domain) {
  DyadicTree tree(domain.TreeLevels(), domain.universe_size());
  const int leaf_level = tree.levels_ - 1;
  for (size_t v = 0; v < counts.size(); ++v) {
    tree.nodes_[NodeId(leaf_level, v)] = static_cast<double>(counts[v]);
  }
  for (int level = leaf_level - 1; level >= 0; --level) {
    for (size_t j = 0; j < (size_t{1} << level); ++j) {
      tree.nodes_[NodeId(level, j)] = tree.nodes_[NodeId(level + 1, 2 * j)] +
                                      tree.nodes_[NodeId(level + 1, 2 * j + 1)];
    }
  }
  return tree;
}

double DyadicTree::Prefix(Index x) const {
  const uint64_t end = uint64_t{x} + 1;
  const uint64_t padded = uint64_t{1} << (levels_ - 1);
  uint64_t covered = 0;
  double sum = 0;
  for (int level = 0; level < levels_ && covered < end; ++level) {
    const uint64_t width = padded >> level;
    if (covered + width <= end) {
      sum += nodes_[NodeId(level, covered / width)];
      covered += width;
    }
  }
  return sum;
}

std::vector<double> DyadicTree::AllPrefixes() const {
  std::vector<double> prefixes(universe_size_);
  for (Index x = 0; x < universe_size_; ++x) prefixes[x] = Prefix(x);
  return prefixes;
}

double DyadicTree::NoiseScale(double epsilon) const {
  return static_cast<double>(levels_) / epsilon;
}

void DyadicTree::AddNoise(double epsilon, Rng& rng) {
  if (epsilon == kNoiseless) return;
  const double scale = NoiseScale(epsilon);
  for (double& count : nodes_) count += rng.Laplace(scale);
}

NoisyCdf ConsistentCdf(std::span<const double> prefixes, uint64_t n) {
  NoisyCdf cdf;
  cdf.values.reserve(prefixes.size());
  const double cap = static_cast<double>(n);
  uint64_t running = 0;
  for (double p : prefixes) {
    const double clamped = std::clamp(std::round(p), 0.0, cap);
    running = std::max(running, static_cast<uint64_t>(clamped));
    cdf.values.push_back(running);
  }
  if (!cdf.values.empty()) cdf.values.back() = n;
  return cdf;
}

Block Synthesize(const NoisyCdf& cdf) {
  Block out;
  out.reserve(cdf.total());
  uint64_t previous = 0;
  for (size_t v = 0; v < cdf.values.size(); ++v) {
    out.insert(out.end(), cdf.values[v] - previous, static_cast<Index>(v));
    previous = cdf.values[v];
  }
  return out;
}

absl::StatusOr<Block> SanitizeBlock(std::span<const Index> block,
                                    const Domain& domain, double epsilon,
                                    Rng& rng) {
  if (block.empty()) return absl::InvalidArgumentError("empty block");
  for (Index y : block) {
    if (!domain.Contains(y)) {
      return absl::OutOfRangeError(absl::StrCat(
          "item ", y, " outside universe of size ", domain.universe_size()));
    }
  }
  DyadicTree tree =
      DyadicTree::FromHistogram(BuildHistogram(block, domain), domain);
  tree.AddNoise(epsilon, rng);
  return Synthesize(ConsistentCdf(tree.AllPrefixes(), block.size()));
}

namespace {

double ErrorScale(double beta, double epsilon, const Domain& domain,
                  double constant) {
  const double levels = domain.TreeLevels();
  const double u = domain.universe_size();
  return constant * std::pow(levels, 1.5) *
         std::sqrt(2.0 * std::log(2.0 * u / beta)) / epsilon;
}

}  // namespace

int64_t CalibrateBlockSize(const AccuracyParams& accuracy, double epsilon,
                           const Domain& domain, double constant) {
  if (epsilon == kNoiseless) return 1;
  const double n =
      std::ceil(ErrorScale(accuracy.beta, epsilon, domain, constant) /
                accuracy.alpha);
  if (!(n < 0x1.0p62)) return int64_t{1} << 62;
  return std::max<int64_t>(1, static_cast<int64_t>(n));
}

double CalibratedAlpha(int64_t block_size, double beta, double epsilon,
                       const Domain& domain, double constant) {
  if (epsilon == kNoiseless) return 0.0;
  return ErrorScale(beta, epsilon, domain, constant) /
         static_cast<double>(block_size);
}

}  // namespace streamsan
