#include "mwlab/rng.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using mwlab::CounterRng;
using mwlab::Philox4x32;

// Published known-answer vectors for Philox4x32-10.
TEST(Philox, KnownAnswerZero) {
  const auto r = Philox4x32::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(r[0], 0x6627e8d5u);
  EXPECT_EQ(r[1], 0xe169c58du);
  EXPECT_EQ(r[2], 0xbc57ac4cu);
  EXPECT_EQ(r[3], 0x9b00dbd8u);
}

TEST(Philox, KnownAnswerOnes) {
  const auto r = Philox4x32::block({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  EXPECT_EQ(r[0], 0x408f276du);
  EXPECT_EQ(r[1], 0x41c83b0eu);
  EXPECT_EQ(r[2], 0xa20bc7c6u);
  EXPECT_EQ(r[3], 0x6d5451fdu);
}

TEST(Philox, KnownAnswerPi) {
  const auto r = Philox4x32::block({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  EXPECT_EQ(r[0], 0xd16cfe09u);
  EXPECT_EQ(r[1], 0x94fdccebu);
  EXPECT_EQ(r[2], 0x5001e420u);
  EXPECT_EQ(r[3], 0x24126ea1u);
}

TEST(CounterRng, PureFunctionOfCounter) {
  const CounterRng a(42, 3), b(42, 3);
  for (std::int64_t c = -5; c < 100; ++c) EXPECT_EQ(a.uniform(c), b.uniform(c));
  EXPECT_NE(a.uniform(0), CounterRng(42, 4).uniform(0));
  EXPECT_NE(a.uniform(0), CounterRng(43, 3).uniform(0));
  EXPECT_NE(a.uniform(0, 0), a.uniform(0, 1));
}

TEST(CounterRng, UniformMoments) {
  const CounterRng rng(1, 0);
  const int n = 200000;
  double sum = 0, sum2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform(i);
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
    sum2 += u * u;
  }
  // mean 1/2 (sd 0.2887/sqrt(n)), second moment 1/3.
  EXPECT_NEAR(sum / n, 0.5, 5 * 0.2887 / std::sqrt(n));
  EXPECT_NEAR(sum2 / n, 1.0 / 3.0, 5 * 0.2981 / std::sqrt(n));
}
