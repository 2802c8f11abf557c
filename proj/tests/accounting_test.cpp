#include "semcom/accounting.hpp"

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {
namespace {

TEST(IndexBitsTest, CeilingConvention) {
  EXPECT_EQ(ceil_log2(1), 0u);
  EXPECT_EQ(ceil_log2(2), 1u);
  EXPECT_EQ(ceil_log2(28), 5u);
  EXPECT_EQ(ceil_log2(32), 5u);
  EXPECT_EQ(ceil_log2(33), 6u);
  EXPECT_EQ(ceil_log2(50), 6u);
  EXPECT_THROW(ceil_log2(0), InvalidArgument);
  EXPECT_EQ(index_bits(28, 50), 11u);
  EXPECT_EQ(index_bits(8, 16), 7u);
}

TEST(IndexCostTest, DefaultModel) {
  const SideChannelModel sc;
  // (5 + 6) bits / (1/2 rate * 1 bit/symbol * 0.9 success)
  const double per_index = 11.0 * 2.0 / 0.9;
  EXPECT_NEAR(per_index_symbols(28, 50, sc), per_index, 1e-12);
  EXPECT_NEAR(per_index_symbols(28, 50, sc), 24.444, 1e-3);
  EXPECT_EQ(index_cost_symbols(0, 28, 50, sc), 0.0);
  EXPECT_NEAR(index_cost_symbols(3, 28, 50, sc), 3 * per_index, 1e-12);
}

TEST(IndexCostTest, AverageHitCountMatchesReportedSymbolBudget) {
  // Cost is linear in hit count, so an average of 15.3 hits costs
  // 15.3 * per-index symbols.
  const SideChannelModel sc;
  const double avg = 15.3 * per_index_symbols(28, 50, sc);
  EXPECT_NEAR(avg, 374.0, 0.05);
  EXPECT_LT(std::abs(avg - 370.0) / 370.0, 0.05);
}

TEST(IndexCostTest, MonotoneInSuccessProbability) {
  SideChannelModel sc;
  double prev = INFINITY;
  for (double p : {0.1, 0.3, 0.5, 0.9, 1.0}) {
    sc.success_prob = p;
    const double c = per_index_symbols(28, 50, sc);
    EXPECT_LT(c, prev);
    EXPECT_NEAR(c * p, 22.0, 1e-12);
    prev = c;
  }
}

TEST(IndexCostTest, InvalidModelRejected) {
  SideChannelModel sc;
  sc.success_prob = 0.0;
  EXPECT_THROW(per_index_symbols(28, 50, sc), InvalidArgument);
  sc = SideChannelModel{};
  sc.code_rate = 1.5;
  EXPECT_THROW(per_index_symbols(28, 50, sc), InvalidArgument);
  sc = SideChannelModel{};
  sc.bits_per_symbol = 0;
  EXPECT_THROW(per_index_symbols(28, 50, sc), InvalidArgument);
}

TEST(SampledIndexCostTest, CertainDeliveryIsOneAttempt) {
  SideChannelModel sc;
  sc.success_prob = 1.0;
  CounterRng rng(1);
  EXPECT_EQ(sampled_index_cost_symbols(4, 28, 50, sc, rng), 4 * 22.0);
  EXPECT_EQ(sampled_index_cost_symbols(0, 28, 50, sc, rng), 0.0);
}

TEST(SampledIndexCostTest, MeanMatchesExpectation) {
  const SideChannelModel sc;
  CounterRng rng(2);
  constexpr int kDraws = 200000;
  double sum = 0.0;
  for (int n = 0; n < kDraws; ++n) {
    const double c = sampled_index_cost_symbols(1, 28, 50, sc, rng);
    // Always a whole number of message attempts.
    ASSERT_EQ(std::fmod(c, 22.0), 0.0);
    sum += c;
  }
  EXPECT_NEAR(sum / kDraws, per_index_symbols(28, 50, sc), 0.05);
}

TEST(BcrTest, FullLatentBaseline) {
  const ImageShape img{3, 512, 512};
  const double k = 0.5 * 28 * 512;
  EXPECT_EQ(k, 7168.0);
  EXPECT_EQ(bcr(k, img), 7168.0 / 786432.0);
  EXPECT_NEAR(1.0 / bcr(k, img), 109.714, 1e-3);
}

TEST(BcrTest, IndexOnlyTransmission) {
  const ImageShape img{3, 512, 512};
  const double k = index_cost_symbols(28, 28, 50, SideChannelModel{});
  EXPECT_NEAR(k, 684.44, 0.01);
  EXPECT_NEAR(1.0 / bcr(k, img), 1149.0, 0.5);
  EXPECT_EQ(bcr(3.0 * 512 * 512, img), 1.0);
}

TEST(PsnrTest, Examples) {
  const ImageShape shape{3, 4, 4};
  const Image zeros(shape, 0.0);
  const Image ones(shape, 1.0);
  EXPECT_EQ(psnr(zeros, zeros), 100.0);
  EXPECT_NEAR(psnr(zeros, ones), 0.0, 1e-12);
  Image one_level(shape, 1.0 / 255.0);
  EXPECT_NEAR(mse(zeros, one_level), 1.0, 1e-12);
  EXPECT_NEAR(psnr(zeros, one_level), 20.0 * std::log10(255.0), 1e-9);
  EXPECT_NEAR(psnr(zeros, one_level), 48.13, 0.005);
  EXPECT_THROW(psnr(zeros, Image({3, 4, 5})), InvalidArgument);
}

TEST(PsnrTest, CapAppliesToTinyErrors) {
  const ImageShape shape{1, 2, 2};
  Image a(shape, 0.5);
  Image b = a;
  b.pixels()[0] += 1e-9;
  EXPECT_EQ(psnr(a, b), kPsnrCapDb);
  b.pixels()[0] = 0.6;
  EXPECT_LT(psnr(a, b), kPsnrCapDb);
  EXPECT_EQ(psnr(a, b), psnr(b, a));
}

TEST(PerceptualDistanceTest, Properties) {
  const FeatureExtractor fe;
  const ImageShape shape{3, 8, 8};
  Image a(shape);
  Image b(shape);
  for (std::size_t k = 0; k < shape.size(); ++k) {
    a.pixels()[k] = 0.5 + 0.4 * std::sin(0.37 * static_cast<double>(k));
    b.pixels()[k] = 0.5 + 0.4 * std::cos(0.11 * static_cast<double>(k));
  }
  EXPECT_EQ(perceptual_distance(fe, a, a), 0.0);
  const double d = perceptual_distance(fe, a, b);
  EXPECT_GT(d, 0.0);
  EXPECT_NEAR(d, perceptual_distance(fe, b, a), 1e-12 * d);
}

TEST(RecordOutputTest, CsvAndJson) {
  TransmissionRecord r;
  r.image_index = 2;
  r.n_s = 1;
  r.payload_symbols = 16;
  r.index_symbols = 31.0;
  r.k_total = 47.0;
  r.bcr = 0.25;
  r.psnr_db = 100.0;
  r.perceptual_distance = 0.0;
  r.hits = {{0, 3, 1.0}, {2, 0, 0.5}};
  std::ostringstream csv;
  write_records_csv(csv, {r});
  EXPECT_EQ(csv.str(),
            std::string(kRecordCsvHeader) + "\n2,1,2,16,31,47,0.25,100,0,0:3:1;2:0:0.5\n");

  std::ostringstream jsonl;
  write_records_jsonl(jsonl, {r, r});
  std::istringstream lines(jsonl.str());
  std::string line;
  int count = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    EXPECT_EQ(j["n_hits"], 2);
    EXPECT_EQ(j["hits"][0]["index"], 3);
    ++count;
  }
  EXPECT_EQ(count, 2);
}

TEST(FormatDoubleTest, ShortestRoundTrip) {
  EXPECT_EQ(format_double(0.1), "0.1");
  EXPECT_EQ(format_double(1.0 / 3.0), "0.3333333333333333");
  EXPECT_EQ(std::stod(format_double(7168.0 / 786432.0)), 7168.0 / 786432.0);
  EXPECT_EQ(format_double(INFINITY), "inf");
}

}  // namespace
}  // namespace semcom
