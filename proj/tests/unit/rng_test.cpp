#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rlscale/rng.hpp"

using rlscale::CounterRng;
using rlscale::stream_key;

TEST(CounterRng, SameKeySameStream) {
  CounterRng a(stream_key(7, 1, 2));
  CounterRng b(stream_key(7, 1, 2));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a(), b());
}

TEST(CounterRng, CoordinatesSeparateStreams) {
  EXPECT_NE(stream_key(7, 1, 2), stream_key(7, 2, 1));
  EXPECT_NE(stream_key(7, 0), stream_key(8, 0));
  CounterRng a(stream_key(7, 1));
  CounterRng b(stream_key(7, 2));
  EXPECT_NE(a(), b());
}

TEST(CounterRng, UniformAndIndexRanges) {
  CounterRng rng(stream_key(1));
  std::vector<int> counts(5, 0);
  for (int i = 0; i < 50000; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    ++counts[rng.index(5)];
  }
  for (int c : counts) EXPECT_NEAR(c, 10000, 500);
}

TEST(CounterRng, NormalMoments) {
  CounterRng rng(stream_key(3));
  double sum = 0.0;
  double sq = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal();
    sum += z;
    sq += z * z;
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0, 0.02);
}
