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

#include "streamsan/quantile_sketch.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <utility>

#include "absl/strings/str_cat.h"

namespace streamsan {

namespace {

constexpr std::string_view kMagic = "QSK1";

void PutU32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

void PutU64(std::string& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>(v >> (8 * i)));
}

class BlobReader {
 public:
  explicit BlobReader(std::string_view blob) : blob_(blob) {}

  bool ReadU32(uint32_t& v) {
    uint64_t wide;
    if (!ReadLe(4, wide)) return false;
    v = static_cast<uint32_t>(wide);
    return true;
  }
  bool ReadU64(uint64_t& v) { return ReadLe(8, v); }
  size_t remaining() const { return blob_.size() - pos_; }

 private:
  bool ReadLe(int bytes, uint64_t& v) {
    if (remaining() < static_cast<size_t>(bytes)) return false;
    v = 0;
    for (int i = 0; i < bytes; ++i) {
      v |= uint64_t{static_cast<unsigned char>(blob_[pos_ + i])} << (8 * i);
    }
    pos_ += bytes;
    return true;
  }

  std::string_view blob_;
  size_t pos_ = 0;
};

}  // namespace

absl::StatusOr<QuantileSketch> QuantileSketch::Create(uint32_t universe_size,
                                                      uint32_t capacity,
                                                      uint64_t seed) {
  if (universe_size < 1) {
    return absl::InvalidArgumentError("universe size must be at least 1");
  }
  if (capacity < 2) {
    return absl::InvalidArgumentError("sketch capacity must be at least 2");
  }
  return QuantileSketch(universe_size, capacity, seed);
}

uint32_t QuantileSketch::CapacityForAccuracy(double alpha) {
  const double raw = std::ceil(kCapacityConstant / alpha);
  const auto capacity =
      static_cast<uint32_t>(std::clamp(raw, 2.0, double{1u << 30}));
  return capacity + (capacity & 1u);
}

uint64_t QuantileSketch::StorageBound(uint32_t capacity, uint64_t count) {
  if (count < capacity) return count;
  const uint64_t ratio = count / capacity;
  const uint64_t levels = static_cast<uint64_t>(std::bit_width(ratio)) + 1;
  return uint64_t{capacity - 1} * levels;
}

void QuantileSketch::Update(Index x) {
  levels_[0].push_back(x);
  ++count_;
  if (levels_[0].size() >= capacity_) CompactFrom(0);
}

void QuantileSketch::CompactFrom(size_t level) {
  for (size_t h = level; h < levels_.size(); ++h) {
    if (levels_[h].size() < capacity_) continue;
    if (h + 1 == levels_.size()) levels_.emplace_back();
    std::vector<Index>& source = levels_[h];
    std::vector<Index>& target = levels_[h + 1];
    std::sort(source.begin(), source.end());
    const size_t paired = source.size() & ~size_t{1};
    const size_t offset = rng_.Bit() ? 1 : 0;
    for (size_t i = offset; i < paired; i += 2) target.push_back(source[i]);
    source.erase(source.begin(), source.begin() + paired);
  }
}

absl::StatusOr<QuantileSketch> QuantileSketch::Merge(QuantileSketch a,
                                                     QuantileSketch b) {
  if (a.universe_size_ != b.universe_size_ || a.capacity_ != b.capacity_) {
    return absl::InvalidArgumentError(absl::StrCat(
        "cannot merge sketches with different universe or capacity (",
        a.universe_size_, "/", a.capacity_, " vs ", b.universe_size_, "/",
        b.capacity_, ")"));
  }
  if (b.levels_.size() > a.levels_.size()) a.levels_.resize(b.levels_.size());
  for (size_t h = 0; h < b.levels_.size(); ++h) {
    a.levels_[h].insert(a.levels_[h].end(), b.levels_[h].begin(),
                        b.levels_[h].end());
  }
  a.count_ += b.count_;
  a.CompactFrom(0);
  return a;
}

size_t QuantileSketch::stored_items() const {
  size_t total = 0;
  for (const auto& level : levels_) total += level.size();
  return total;
}

uint64_t QuantileSketch::stored_weight() const {
  uint64_t total = 0;
  for (size_t h = 0; h < levels_.size(); ++h) {
    total += uint64_t{levels_[h].size()} << h;
  }
  return total;
}

absl::StatusOr<uint64_t> QuantileSketch::RankEstimate(Index x) const {
  if (count_ == 0) return absl::FailedPreconditionError("empty sketch");
  uint64_t rank = 0;
  for (size_t h = 0; h < levels_.size(); ++h) {
    for (Index y : levels_[h]) {
      if (y < x) rank += uint64_t{1} << h;
    }
  }
  return rank;
}

std::vector<uint64_t> QuantileSketch::AllRankEstimates() const {
  std::vector<uint64_t> ranks(size_t{universe_size_} + 1, 0);
  for (size_t h = 0; h < levels_.size(); ++h) {
    for (Index y : levels_[h]) ranks[y + 1] += uint64_t{1} << h;
  }
  for (size_t x = 1; x < ranks.size(); ++x) ranks[x] += ranks[x - 1];
  return ranks;
}

absl::StatusOr<Index> QuantileSketch::QuantileQuery(double q) const {
  if (count_ == 0) return absl::FailedPreconditionError("empty sketch");
  if (!(q >= 0 && q <= 1)) {
    return absl::InvalidArgumentError(
        absl::StrCat("quantile must lie in [0, 1], got ", q));
  }
  std::vector<std::pair<Index, uint64_t>> weighted;
  weighted.reserve(stored_items());
  for (size_t h = 0; h < levels_.size(); ++h) {
    for (Index y : levels_[h]) weighted.emplace_back(y, uint64_t{1} << h);
  }
  std::sort(weighted.begin(), weighted.end());
  const long double target = q * static_cast<long double>(count_);
  uint64_t cumulative = 0;
  for (size_t i = 0; i < weighted.size(); ++i) {
    cumulative += weighted[i].second;
    // Inclusive rank counts every copy of the value.
    if (i + 1 < weighted.size() && weighted[i + 1].first == weighted[i].first) {
      continue;
    }
    if (static_cast<long double>(cumulative) >= target) {
      return weighted[i].first;
    }
  }
  return weighted.back().first;
}

std::string QuantileSketch::Serialize() const {
  std::string out(kMagic);
  PutU32(out, universe_size_);
  PutU32(out, capacity_);
  PutU64(out, count_);
  PutU32(out, static_cast<uint32_t>(levels_.size()));
  for (const auto& level : levels_) {
    PutU32(out, static_cast<uint32_t>(level.size()));
    for (Index y : level) PutU32(out, y);
  }
  return out;
}

absl::StatusOr<QuantileSketch> QuantileSketch::Deserialize(
    std::string_view blob, uint64_t seed) {
  if (blob.substr(0, kMagic.size()) != kMagic) {
    return absl::InvalidArgumentError("not a sketch blob (bad magic)");
  }
  BlobReader reader(blob.substr(kMagic.size()));
  uint32_t universe_size = 0;
  uint32_t capacity = 0;
  uint64_t count = 0;
  uint32_t num_levels = 0;
  if (!reader.ReadU32(universe_size) || !reader.ReadU32(capacity) ||
      !reader.ReadU64(count) || !reader.ReadU32(num_levels)) {
    return absl::DataLossError("truncated sketch header");
  }
  absl::StatusOr<QuantileSketch> sketch =
      Create(universe_size, capacity, seed);
  if (!sketch.ok()) return sketch.status();
  if (num_levels == 0 || num_levels > 64) {
    return absl::DataLossError("bad level count in sketch blob");
  }
  sketch->levels_.assign(num_levels, {});
  for (auto& level : sketch->levels_) {
    uint32_t len = 0;
    if (!reader.ReadU32(len) || reader.remaining() / 4 < len) {
      return absl::DataLossError("truncated sketch level");
    }
    level.resize(len);
    for (Index& y : level) {
      reader.ReadU32(y);
      if (y >= universe_size) {
        return absl::DataLossError("sketch item outside universe");
      }
    }
  }
  if (reader.remaining() != 0) {
    return absl::DataLossError("trailing bytes after sketch blob");
  }
  sketch->count_ = count;
  if (sketch->stored_weight() != count) {
    return absl::DataLossError("sketch weights do not match its count");
  }
  return sketch;
}

}  // namespace streamsan
