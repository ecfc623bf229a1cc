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

// Non-private mergeable quantile summary built from a stack of fixed-capacity
// compactors.
//
// Level h holds items of weight 2^h. When a level reaches the capacity it is
// sorted and its items are paired; one item of each pair (chosen by a random
// even/odd offset shared by the whole compaction) moves to level h + 1 and
// the other is dropped. With an odd count, the largest item stays behind so
// the stored weight always equals the number of updates exactly.
//
// Every level holds fewer than `capacity` items between operations and level
// h is only ever reached after at least capacity * 2^(h-1) updates, so
//
//   stored_items <= (capacity - 1) * (floor(log2(N / capacity)) + 2).
//
// See StorageBound().

#ifndef STREAMSAN_QUANTILE_SKETCH_H_
#define STREAMSAN_QUANTILE_SKETCH_H_

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "absl/status/status.h"
#include "absl/status/statusor.h"
#include "streamsan/core.h"
#include "streamsan/random.h"

namespace streamsan {

class QuantileSketch {
 public:
  // Default capacity per unit of accuracy; see CapacityForAccuracy().
  static constexpr double kCapacityConstant = 4.0;

  static absl::StatusOr<QuantileSketch> Create(uint32_t universe_size,
                                               uint32_t capacity,
                                               uint64_t seed);

  // Even capacity ceil(kCapacityConstant / alpha), rounded up to even. At
  // this capacity the maximum normalized rank error stays below alpha with
  // probability at least 0.99 (validated empirically; see tests).
  static uint32_t CapacityForAccuracy(double alpha);

  static uint64_t StorageBound(uint32_t capacity, uint64_t count);

  // Consumes both sketches. Fails unless universe and capacity match.
  static absl::StatusOr<QuantileSketch> Merge(QuantileSketch a,
                                              QuantileSketch b);

  void Update(Index x);

  // Estimated number of updates strictly below x. x may equal the universe
  // size, in which case the result is count().
  absl::StatusOr<uint64_t> RankEstimate(Index x) const;

  // Estimated ranks for every x in [0, U], in O(stored + U).
  std::vector<uint64_t> AllRankEstimates() const;

  // Smallest stored item whose estimated inclusive rank (weight of items
  // <= x) reaches q * count(). q in [0, 1].
  absl::StatusOr<Index> QuantileQuery(double q) const;

  uint64_t count() const { return count_; }
  uint32_t capacity() const { return capacity_; }
  uint32_t universe_size() const { return universe_size_; }
  size_t num_levels() const { return levels_.size(); }
  size_t stored_items() const;
  uint64_t stored_weight() const;

  // Little-endian blob: "QSK1", u32 universe, u32 capacity, u64 count,
  // u32 level count, then per level a u32 length followed by u32 items.
  std::string Serialize() const;
  static absl::StatusOr<QuantileSketch> Deserialize(std::string_view blob,
                                                    uint64_t seed);

 private:
  QuantileSketch(uint32_t universe_size, uint32_t capacity, uint64_t seed)
      : universe_size_(universe_size), capacity_(capacity), rng_(seed) {
    levels_.emplace_back();
  }

  void CompactFrom(size_t level);

  uint32_t universe_size_;
  uint32_t capacity_;
  uint64_t count_ = 0;
  Rng rng_;
  std::vector<std::vector<Index>> levels_;
};

}  // namespace streamsan

#endif  // STREAMSAN_QUANTILE_SKETCH_H_
