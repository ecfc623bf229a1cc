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
#include <cmath>
#include <optional>
#include <vector>

#include "gmock/gmock.h"
#include "gtest/gtest.h"
#include "streamsan/core.h"
#include "streamsan/offline_sanitizer.h"
#include "streamsan/random.h"

namespace streamsan {
namespace {

using ::testing::ElementsAre;
using ::testing::HasSubstr;

StreamConfig Config(int64_t n, double epsilon,
                    PartialBlockPolicy policy = PartialBlockPolicy::kStrict,
                    uint64_t seed = 1) {
  StreamConfig c;
  c.block_size = n;
  c.privacy.epsilon = epsilon;
  c.partial_block_policy = policy;
  c.seed = seed;
  return c;
}

StreamSanitizer Make(uint32_t u, const StreamConfig& c) {
  return *StreamSanitizer::Create(*Domain::OfSize(u), c);
}

std::vector<Block> RunAll(StreamSanitizer& s, const std::vector<Index>& in) {
  std::vector<Block> out;
  for (Index y : in) {
    if (std::optional<Block> b = s.Push(y)) out.push_back(*b);
  }
  if (std::optional<Block> tail = *s.Finish()) out.push_back(*tail);
  return out;
}

TEST(StreamSanitizerTest, NoiselessEmitsSortedBlocks) {
  StreamSanitizer s = Make(4, Config(2, kNoiseless));
  EXPECT_FALSE(s.Push(3).has_value());
  std::optional<Block> first = s.Push(1);
  ASSERT_TRUE(first.has_value());
  EXPECT_THAT(*first, ElementsAre(1, 3));
  EXPECT_FALSE(s.Push(2).has_value());
  std::optional<Block> second = s.Push(0);
  ASSERT_TRUE(second.has_value());
  EXPECT_THAT(*second, ElementsAre(0, 2));
  EXPECT_EQ(s.blocks_emitted(), 2);
}

TEST(StreamSanitizerTest, NoEmissionBelowBlockSize) {
  StreamSanitizer s = Make(8, Config(4, 1.0));
  EXPECT_FALSE(s.Push(5).has_value());
  EXPECT_EQ(s.buffered(), 1u);
}

TEST(StreamSanitizerTest, EveryBlockHasExactSize) {
  StreamSanitizer s = Make(64, Config(4096, 1.0));
  Rng rng(2);
  int64_t emitted = 0;
  for (int i = 0; i < 4096 * 5; ++i) {
    if (std::optional<Block> b = s.Push(rng.NextBits() % 64)) {
      EXPECT_EQ(b->size(), 4096u);
      emitted += b->size();
    }
    EXPECT_LE(s.buffered(), 4096u);
  }
  EXPECT_EQ(emitted, 4096 * 5);
  EXPECT_EQ(s.peak_buffered(), 4096u);
}

TEST(StreamSanitizerTest, FinishEmptyBufferEmitsNothing) {
  StreamSanitizer s = Make(8, Config(2, 1.0));
  s.Push(1);
  s.Push(2);
  absl::StatusOr<std::optional<Block>> tail = s.Finish();
  ASSERT_TRUE(tail.ok());
  EXPECT_FALSE(tail->has_value());
}

TEST(StreamSanitizerTest, StrictFinishRejectsResidual) {
  StreamSanitizer s = Make(8, Config(2, 1.0));
  s.Push(7);
  absl::StatusOr<std::optional<Block>> tail = s.Finish();
  ASSERT_FALSE(tail.ok());
  EXPECT_THAT(tail.status().message(),
              HasSubstr("stream length not a multiple of block size"));
}

TEST(StreamSanitizerTest, SanitizePartialResidual) {
  StreamSanitizer s =
      Make(8, Config(4, kNoiseless, PartialBlockPolicy::kSanitizePartial));
  s.Push(7);
  s.Push(7);
  absl::StatusOr<std::optional<Block>> tail = s.Finish();
  ASSERT_TRUE(tail.ok());
  ASSERT_TRUE(tail->has_value());
  EXPECT_THAT(**tail, ElementsAre(7, 7));
  EXPECT_EQ(s.partial_block_size(), std::optional<size_t>(2));
}

TEST(StreamSanitizerTest, ConfigValidation) {
  const Domain d = *Domain::OfSize(4);
  EXPECT_FALSE(StreamSanitizer::Create(d, Config(0, 1.0)).ok());
  StreamConfig c = Config(2, 1.0);
  c.subsample_rate = 0;
  EXPECT_FALSE(StreamSanitizer::Create(d, c).ok());
  c.subsample_rate = 1.5;
  EXPECT_FALSE(StreamSanitizer::Create(d, c).ok());
  c = Config(2, -1.0);
  EXPECT_FALSE(StreamSanitizer::Create(d, c).ok());
  EXPECT_TRUE(ParsePartialBlockPolicy("sanitize").ok());
  EXPECT_FALSE(ParsePartialBlockPolicy("lax").ok());
}

TEST(StreamSanitizerTest, OutputLengthEqualsInputLength) {
  StreamSanitizer s = Make(100, Config(50, 0.5));
  Rng rng(3);
  std::vector<Index> in(50 * 7);
  for (Index& y : in) y = rng.NextBits() % 100;
  size_t total = 0;
  for (const Block& b : RunAll(s, in)) total += b.size();
  EXPECT_EQ(total, in.size());
}

TEST(StreamSanitizerTest, BlockLocality) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const uint32_t u = 2 + rng.NextBits() % 200;
    const int64_t n = 1 + rng.NextBits() % 64;
    const int64_t k = 1 + rng.NextBits() % 8;
    std::vector<Index> in(static_cast<size_t>(n * k));
    for (Index& y : in) y = rng.NextBits() % u;
    std::vector<Index> flipped = in;
    const size_t i = rng.NextBits() % in.size();
    flipped[i] = (flipped[i] + 1) % u;
    const uint64_t seed = rng.NextBits();
    StreamSanitizer a = Make(u, Config(n, 1.0, PartialBlockPolicy::kStrict, seed));
    StreamSanitizer b = Make(u, Config(n, 1.0, PartialBlockPolicy::kStrict, seed));
    const std::vector<Block> out_a = RunAll(a, in);
    const std::vector<Block> out_b = RunAll(b, flipped);
    ASSERT_EQ(out_a.size(), out_b.size());
    for (size_t j = 0; j < out_a.size(); ++j) {
      if (j != i / n) EXPECT_EQ(out_a[j], out_b[j]) << "block " << j;
    }
  }
}

TEST(StreamSanitizerTest, StreamErrorBoundedByWorstBlock) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    const uint32_t u = 2 + rng.NextBits() % 100;
    const int64_t n = 1 + rng.NextBits() % 200;
    const int64_t k = 1 + rng.NextBits() % 6;
    std::vector<Index> in(static_cast<size_t>(n * k));
    for (Index& y : in) y = rng.NextBits() % u;
    StreamSanitizer s = Make(u, Config(n, 0.2 + rng.Uniform(),
                                       PartialBlockPolicy::kStrict,
                                       rng.NextBits()));
    s.EnableErrorLog();
    std::vector<Index> out;
    for (const Block& b : RunAll(s, in)) out.insert(out.end(), b.begin(), b.end());
    // Independent recomputation of each block's error.
    double worst = 0;
    std::vector<Index> rebuilt;
    ASSERT_EQ(s.block_errors().size(), static_cast<size_t>(k));
    for (int64_t j = 0; j < k; ++j) {
      std::span<const Index> d(in.data() + j * n, n);
      std::span<const Index> dp(out.data() + j * n, n);
      const double e = *KolmogorovError(d, dp, u);
      EXPECT_DOUBLE_EQ(e, s.block_errors()[j]);
      worst = std::max(worst, e);
    }
    EXPECT_LE(*KolmogorovError(in, out, u), worst + 1e-9);
  }
}

TEST(StreamSanitizerTest, NoiselessEndToEnd) {
  StreamSanitizer s = Make(33, Config(10, kNoiseless));
  Rng rng(6);
  std::vector<Index> in(100);
  for (Index& y : in) y = rng.NextBits() % 33;
  std::vector<Index> out;
  for (const Block& b : RunAll(s, in)) out.insert(out.end(), b.begin(), b.end());
  EXPECT_EQ(*KolmogorovError(in, out, 33), 0.0);
}

TEST(SubsampleTest, Extremes) {
  const std::vector<Index> in = {4, 1, 3, 3, 0};
  Rng rng(7);
  EXPECT_EQ(SubsampleStream(in, 1.0, rng), in);
  EXPECT_TRUE(SubsampleStream(in, 0.0, rng).empty());
}

TEST(SubsampleTest, HalfRateLength) {
  std::vector<Index> in(100000);
  for (size_t i = 0; i < in.size(); ++i) in[i] = i % 17;
  Rng rng(8);
  const std::vector<Index> out = SubsampleStream(in, 0.5, rng);
  EXPECT_GE(out.size(), 49000u);
  EXPECT_LE(out.size(), 51000u);
  // Order preserved: the ramp pattern survives as a non-decreasing run
  // between wraps.
  size_t descents = 0;
  for (size_t i = 1; i < out.size(); ++i) descents += out[i] < out[i - 1];
  EXPECT_LE(descents, in.size() / 17);
}

TEST(SubsampleTest, SubsamplerMatchesRate) {
  Subsampler always(1.0, 1);
  for (int i = 0; i < 100; ++i) EXPECT_TRUE(always.Keep());
  Subsampler tenth(0.1, 2);
  int kept = 0;
  for (int i = 0; i < 100000; ++i) kept += tenth.Keep();
  EXPECT_NEAR(kept, 10000, 600);
}

TEST(AmplifiedPrivacyTest, Examples) {
  const PrivacyParams same = *AmplifiedPrivacy(1.0, 1e-6, 1.0);
  EXPECT_EQ(same.epsilon, 1.0);
  EXPECT_EQ(same.delta, 1e-6);
  EXPECT_NEAR(AmplifiedPrivacy(1.0, 0.0, 0.1)->epsilon,
              0.15856507874042911, 1e-12);
  EXPECT_LT(AmplifiedPrivacy(3.0, 0.0, 1e-9)->epsilon, 1e-7);
  EXPECT_NEAR(AmplifiedPrivacy(1.0, 1e-5, 0.1)->delta, 1e-6, 1e-18);
  EXPECT_FALSE(AmplifiedPrivacy(1.0, 0.0, 0.0).ok());
  EXPECT_FALSE(AmplifiedPrivacy(0.0, 0.0, 0.5).ok());
}

TEST(AmplifiedPrivacyTest, Properties) {
  for (double eps0 : {0.1, 0.5, 1.0, 2.0, 5.0}) {
    double previous = 0;
    for (int i = 1; i <= 100; ++i) {
      const double p = i / 100.0;
      const double eps = AmplifiedPrivacy(eps0, 0.0, p)->epsilon;
      EXPECT_LE(eps, eps0 + 1e-15);
      EXPECT_GT(eps, previous);
      EXPECT_LE(eps, p * std::expm1(eps0) + 1e-15);
      previous = eps;
    }
  }
}

TEST(AccountPrivacyTest, ParallelCompositionAndAmplification) {
  StreamConfig c = Config(100, 1.0);
  EXPECT_EQ(AccountPrivacy(c).epsilon, 1.0);
  EXPECT_EQ(AccountPrivacy(c).delta, 0.0);
  // Independent of the number of blocks: nothing in the config depends on k.
  c.block_size = 1;
  EXPECT_EQ(AccountPrivacy(c).epsilon, 1.0);
  c.subsample_rate = 0.1;
  EXPECT_NEAR(AccountPrivacy(c).epsilon, 0.15856507874042911, 1e-12);
  EXPECT_EQ(AccountPrivacy(c).delta, 0.0);
}

TEST(ConfidenceBoundTest, Examples) {
  const AccuracyParams acc{0.05, 0.01};
  ConfidenceBound u = ComputeConfidenceBound(10, acc, ConfidenceMode::kUnion);
  EXPECT_DOUBLE_EQ(u.error_bound, 0.05);
  EXPECT_DOUBLE_EQ(u.failure_probability, 0.1);
  u = ComputeConfidenceBound(1, acc, ConfidenceMode::kUnion);
  EXPECT_DOUBLE_EQ(u.error_bound, 0.05);
  EXPECT_DOUBLE_EQ(u.failure_probability, 0.01);
  EXPECT_DOUBLE_EQ(
      ComputeConfidenceBound(1000, acc, ConfidenceMode::kUnion)
          .failure_probability,
      1.0);
  for (int64_t k : {1, 10, 100, 100000}) {
    const ConfidenceBound c =
        ComputeConfidenceBound(k, acc, ConfidenceMode::kChernoff);
    EXPECT_NEAR(c.error_bound, 0.07, 1e-15);
    EXPECT_DOUBLE_EQ(c.failure_probability, std::exp(-2.0 * k * 1e-4));
  }
  EXPECT_TRUE(ParseConfidenceMode("chernoff").ok());
  EXPECT_FALSE(ParseConfidenceMode("markov").ok());
}

TEST(MinimumStreamLengthTest, Formula) {
  EXPECT_EQ(MinimumStreamLength({0.1, 0.05}, 0.1), 8000);
  EXPECT_EQ(MinimumStreamLength({0.999, 0.05}, 1.0), 9);
  EXPECT_EQ(MinimumStreamLength({0.05, 0.05}, 0.1),
            4 * MinimumStreamLength({0.1, 0.05}, 0.1));
}

// At the minimum length, the subsample's empirical CDF stays within alpha of
// the full stream's.
TEST(MinimumStreamLengthTest, SamplingErrorWithinAlpha) {
  const AccuracyParams acc{0.1, 0.05};
  const double p = 0.1;
  const int64_t m = MinimumStreamLength(acc, p);
  Rng rng(9);
  std::vector<Index> in(static_cast<size_t>(m));
  for (Index& y : in) y = rng.Bit() ? 3 : rng.NextBits() % 256;
  int failures = 0;
  for (int t = 0; t < 200; ++t) {
    const std::vector<Index> sub = SubsampleStream(in, p, rng);
    if (sub.empty() || *KolmogorovError(in, sub, 256) > acc.alpha) ++failures;
  }
  EXPECT_LE(failures, 2);
}

}  // namespace
}  // namespace streamsan
