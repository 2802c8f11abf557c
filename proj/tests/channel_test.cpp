#include "semcom/channel.hpp"

#include <cmath>

#include <gtest/gtest.h>

namespace semcom {
namespace {

ComplexBlock ramp(std::size_t n) {
  ComplexBlock b(n);
  for (std::size_t k = 0; k < n; ++k) {
    b[k] = {std::sin(0.1 * static_cast<double>(k)), std::cos(0.3 * static_cast<double>(k))};
  }
  return b;
}

TEST(NoiseVarianceTest, DecibelConversions) {
  EXPECT_DOUBLE_EQ(noise_variance(0.0), 1.0);
  EXPECT_NEAR(noise_variance(10.0), 0.1, 1e-15);
  EXPECT_NEAR(noise_variance(5.0), 0.31623, 1e-5);
  EXPECT_NEAR(noise_variance(-10.0), 10.0, 1e-12);
  EXPECT_EQ(noise_variance(kInfiniteSnr), 0.0);
}

TEST(TransmitTest, InfiniteSnrIsBitIdentical) {
  const ComplexBlock in = ramp(1000);
  const ComplexBlock out = transmit(in, {kInfiniteSnr, 7}, 3);
  ASSERT_EQ(out.size(), in.size());
  for (std::size_t k = 0; k < in.size(); ++k) {
    EXPECT_EQ(out[k].real(), in[k].real());
    EXPECT_EQ(out[k].imag(), in[k].imag());
  }
}

struct NoiseStats {
  double variance = 0.0;
  double mean_magnitude = 0.0;
  double lag1 = 0.0;
  double real_variance = 0.0;
};

NoiseStats noise_stats(double snr_db, std::uint64_t seed) {
  constexpr std::size_t kN = 100000;
  const ComplexBlock in = ramp(kN);
  const ComplexBlock out = transmit(in, {snr_db, seed}, 0);
  std::vector<std::complex<double>> n(kN);
  std::complex<double> mean{};
  for (std::size_t k = 0; k < kN; ++k) {
    n[k] = out[k] - in[k];
    mean += n[k];
  }
  mean /= static_cast<double>(kN);
  NoiseStats s;
  s.mean_magnitude = std::abs(mean);
  double power = 0.0;
  double re = 0.0;
  std::complex<double> lag{};
  for (std::size_t k = 0; k < kN; ++k) {
    power += std::norm(n[k] - mean);
    re += (n[k].real() - mean.real()) * (n[k].real() - mean.real());
    if (k + 1 < kN) lag += (n[k + 1] - mean) * std::conj(n[k] - mean);
  }
  s.variance = power / kN;
  s.real_variance = re / kN;
  s.lag1 = std::abs(lag) / power;
  return s;
}

TEST(TransmitTest, ZeroDecibelStatistics) {
  for (std::uint64_t seed : {0u, 1u, 2u, 12345u}) {
    const NoiseStats s = noise_stats(0.0, seed);
    EXPECT_GE(s.variance, 0.98) << seed;
    EXPECT_LE(s.variance, 1.02) << seed;
    EXPECT_LT(s.mean_magnitude, 0.02) << seed;
    EXPECT_LT(s.lag1, 0.02) << seed;
    EXPECT_NEAR(s.real_variance, 0.5, 0.01) << seed;
  }
}

TEST(TransmitTest, VarianceTracksSnr) {
  const NoiseStats s = noise_stats(10.0, 4);
  EXPECT_NEAR(s.variance, 0.1, 0.002);
}

TEST(TransmitTest, SeededDeterminism) {
  const ComplexBlock in = ramp(64);
  EXPECT_EQ(transmit(in, {5.0, 9}, 2), transmit(in, {5.0, 9}, 2));
  EXPECT_NE(transmit(in, {5.0, 9}, 2), transmit(in, {5.0, 9}, 3));
  EXPECT_NE(transmit(in, {5.0, 9}, 2), transmit(in, {5.0, 10}, 2));
}

TEST(TransmitTest, EmptyBlock) {
  EXPECT_TRUE(transmit({}, {0.0, 1}, 0).empty());
}

}  // namespace
}  // namespace semcom
