// Copyright 2026 The l2grade Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "l2grade/rng.hpp"

namespace l2grade {
namespace {

TEST(RngStream, EngineMatchesStandardCheckValue) {
  // The C++ standard fixes the 10000th output of a default-seeded mt19937_64.
  RngStream rng(5489u);
  std::uint64_t x = 0;
  for (int i = 0; i < 10000; ++i) x = rng.next_u64();
  EXPECT_EQ(x, 9981545732273789042ull);
}

TEST(RngStream, UniformUsesTop53Bits) {
  RngStream a(17), b(17);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, static_cast<double>(b.next_u64() >> 11) * 0x1.0p-53);
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(RngStream, SameSeedSameSequence) {
  RngStream a(99), b(99);
  for (int i = 0; i < 1000; ++i) {
    EXPECT_EQ(a.normal(), b.normal());
    EXPECT_EQ(a.below(13), b.below(13));
  }
}

TEST(RngStream, NormalMoments) {
  RngStream rng(123);
  double s = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.01);
  EXPECT_NEAR(s2 / n, 1.0, 0.01);
}

TEST(RngStream, BelowCoversRangeUniformly) {
  RngStream rng(5);
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) ++counts[rng.below(7)];
  for (const int c : counts) EXPECT_NEAR(c, 10000, 400);
  EXPECT_EQ(rng.below(1), 0u);
}

TEST(RngStream, ShuffleIsPermutation) {
  RngStream rng(8);
  std::vector<int> v(50);
  std::iota(v.begin(), v.end(), 0);
  rng.shuffle(std::span<int>(v));
  std::vector<int> sorted = v;
  std::ranges::sort(sorted);
  for (int i = 0; i < 50; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_FALSE(std::ranges::is_sorted(v));
}

TEST(RngStream, ForksAreDistinctAndReproducible) {
  RngStream a(1), b(1);
  RngStream fa1 = a.fork(1), fa2 = a.fork(2), fb1 = b.fork(1);
  std::set<std::uint64_t> seen;
  for (int i = 0; i < 10; ++i) {
    const auto x = fa1.next_u64();
    EXPECT_EQ(x, fb1.next_u64());
    seen.insert(x);
    seen.insert(fa2.next_u64());
  }
  EXPECT_EQ(seen.size(), 20u);
}

}  // namespace
}  // namespace l2grade
