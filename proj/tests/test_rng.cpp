#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "spectrain/rng.hpp"

using namespace spectrain;

TEST(Rng, SplitMixKnownValue) {
  // Reference output of the public SplitMix64 finalizer for input 0 + golden gamma.
  EXPECT_EQ(splitmix64(0), 0xe220a8397b1dcdafULL);
}

TEST(Rng, SameSeedAndStreamRepeat) {
  CounterRng a(7, 3), b(7, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, StreamsDiffer) {
  CounterRng a(7, 3), b(7, 4);
  int same = 0;
  for (int i = 0; i < 100; ++i) same += a.next_u64() == b.next_u64();
  EXPECT_EQ(same, 0);
}

TEST(Rng, SeekReplaysCounter) {
  CounterRng a(1, 1);
  for (int i = 0; i < 10; ++i) a.next_u64();
  const auto v = a.next_u64();
  a.seek(10);
  EXPECT_EQ(a.next_u64(), v);
}

TEST(Rng, UniformInUnitInterval) {
  CounterRng r(11, 0);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 0.01);
}

TEST(Rng, NormalMoments) {
  CounterRng r(5, 2);
  const int n = 50000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    ASSERT_TRUE(std::isfinite(z));
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(Rng, BelowStaysInRange) {
  CounterRng r(3, 9);
  for (int i = 0; i < 1000; ++i) EXPECT_LT(r.below(17), 17u);
}

TEST(Rng, PermutationIsBijection) {
  auto p = permutation(100, 42, 0);
  std::vector<std::size_t> sorted = p;
  std::sort(sorted.begin(), sorted.end());
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(sorted[i], i);
  EXPECT_EQ(p, permutation(100, 42, 0));
  EXPECT_NE(p, permutation(100, 43, 0));
}
