#include "semcom/rng.hpp"

#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

namespace semcom {
namespace {

TEST(CounterRngTest, MatchesSplitMix64ReferenceStream) {
  // Published SplitMix64 outputs for seed 0.
  CounterRng rng(0);
  EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
  EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
  EXPECT_EQ(rng.next_u64(), 0x06C45D188009454FULL);
}

TEST(CounterRngTest, RandomAccessByCounter) {
  CounterRng a(42);
  for (int n = 0; n < 10; ++n) a.next_u64();
  CounterRng b(42, 10);
  EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(CounterRngTest, UniformRanges) {
  CounterRng rng(7);
  double sum = 0.0;
  for (int n = 0; n < 100000; ++n) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    const double v = rng.uniform_open();
    ASSERT_GT(v, 0.0);
    ASSERT_LE(v, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / 100000, 0.5, 0.005);
}

TEST(CounterRngTest, GaussianMoments) {
  CounterRng rng(8);
  double s1 = 0.0;
  double s2 = 0.0;
  double s4 = 0.0;
  constexpr int kN = 200000;
  for (int n = 0; n < kN; ++n) {
    const double g = rng.gaussian();
    s1 += g;
    s2 += g * g;
    s4 += g * g * g * g;
  }
  EXPECT_NEAR(s1 / kN, 0.0, 0.01);
  EXPECT_NEAR(s2 / kN, 1.0, 0.01);
  EXPECT_NEAR(s4 / kN, 3.0, 0.06);
}

TEST(CounterRngTest, BelowIsUniform) {
  CounterRng rng(9);
  std::vector<int> counts(5, 0);
  for (int n = 0; n < 50000; ++n) ++counts[rng.below(5)];
  for (int c : counts) EXPECT_NEAR(c, 10000, 400);
}

TEST(Fnv1aTest, ReferenceValues) {
  EXPECT_EQ(fnv1a64(""), 0xCBF29CE484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xAF63DC4C8601EC8CULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171F73967E8ULL);
}

TEST(DeriveSeedTest, LabelsAndIndicesSeparateStreams) {
  std::set<std::uint64_t> seen;
  for (const char* label : {"channel", "source", "generator", "inversion"}) {
    seen.insert(derive_seed(1, label));
    for (std::uint64_t i = 0; i < 50; ++i) seen.insert(derive_seed(1, label, i));
  }
  EXPECT_EQ(seen.size(), 4u * 51u);
  EXPECT_EQ(derive_seed(3, "channel", 5), derive_seed(3, "channel", 5));
  EXPECT_NE(derive_seed(3, "channel"), derive_seed(4, "channel"));
}

}  // namespace
}  // namespace semcom
