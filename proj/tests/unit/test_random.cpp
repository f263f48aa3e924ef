/*
 * Copyright 2026 The fsbias Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <algorithm>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

#include "fsbias/parallel.hpp"
#include "fsbias/random.hpp"

namespace fsbias {
namespace {

TEST(Rng, SameSeedSameStream) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next(), b.next());
  EXPECT_NE(Rng(42).next(), Rng(43).next());
}

TEST(Rng, UniformBelowStaysInRange) {
  Rng rng(7);
  std::vector<int> hist(6, 0);
  for (int i = 0; i < 6000; ++i) ++hist[rng.uniform_below(6)];
  for (int h : hist) {
    EXPECT_GT(h, 850);
    EXPECT_LT(h, 1150);
  }
}

TEST(Rng, SampleIndicesAreDistinct) {
  Rng rng(3);
  for (std::size_t n : {1u, 5u, 50u}) {
    for (std::size_t k = 0; k <= n; ++k) {
      const auto idx = rng.sample_indices(n, k);
      ASSERT_EQ(idx.size(), k);
      std::set<std::size_t> uniq(idx.begin(), idx.end());
      EXPECT_EQ(uniq.size(), k);
      for (auto i : idx) EXPECT_LT(i, n);
    }
  }
}

TEST(Rng, ShuffleIsAPermutation) {
  std::vector<int> v(20);
  std::iota(v.begin(), v.end(), 0);
  Rng rng(11);
  rng.shuffle(std::span<int>(v));
  auto sorted = v;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) EXPECT_EQ(sorted[i], i);
}

TEST(DeriveSeed, DependsOnBothInputs) {
  EXPECT_EQ(derive_seed(1, "q1"), derive_seed(1, "q1"));
  EXPECT_NE(derive_seed(1, "q1"), derive_seed(2, "q1"));
  EXPECT_NE(derive_seed(1, "q1"), derive_seed(1, "q2"));
  // FNV-1a 64 reference values.
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(ParallelFor, FillsEverySlotAndRethrows) {
  std::vector<int> out(100, -1);
  parallel_for(out.size(), 4, [&](std::size_t i) { out[i] = static_cast<int>(i * i); });
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], static_cast<int>(i * i));
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 5) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

}  // namespace
}  // namespace fsbias
