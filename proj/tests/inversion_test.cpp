#include "semcom/inversion.hpp"

#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "semcom/accounting.hpp"
#include "semcom/dataset.hpp"
#include "semcom/error.hpp"

namespace semcom {
namespace {

constexpr LatentShape kLatent{4, 8};
constexpr ImageShape kImage{3, 8, 8};

Image target_for(const GeneratorModel& model, const std::vector<double>& z_star) {
  return Image(model.image_shape(),
               model.forward(std::span<const double>(
                   testing::reference_power_normalize(z_star))));
}

InversionConfig noiseless_l2() {
  InversionConfig cfg;
  cfg.loss = LossKind::l2;
  cfg.lambda2 = 0.0;
  cfg.noise_mode = NoiseMode::off;
  return cfg;
}

TEST(PowerNormalizeVjpTest, MatchesFiniteDifferences) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const auto y = testing::random_vector(16, gen, 0.1 + trial);
    const auto up = testing::random_vector(16, gen);
    const auto analytic = power_normalize_vjp(y, up);
    const auto numeric = testing::central_gradient(
        [&](const std::vector<double>& yy) {
          const auto w = power_normalize(yy).values;
          double s = 0.0;
          for (std::size_t k = 0; k < w.size(); ++k) s += w[k] * up[k];
          return s;
        },
        y, 1e-6 * (0.1 + trial));
    EXPECT_LT(testing::relative_error(analytic, numeric), 1e-6);
  }
}

TEST(PowerNormalizeVjpTest, IsNotAPureScaling) {
  // Gradient along y itself vanishes: PN is invariant to radial motion.
  const std::vector<double> y{1.0, 2.0, -1.0, 0.5};
  const auto g = power_normalize_vjp(y, y);
  for (double v : g) EXPECT_NEAR(v, 0.0, 1e-15);
}

TEST(LossAndGradTest, PerfectReconstructionIsZero) {
  const auto model = GeneratorModel::make_linear(kLatent, kImage, 3);
  std::mt19937_64 gen(2);
  const auto y = testing::random_vector(kLatent.size(), gen);
  const Image x = target_for(model, y);
  InversionConfig cfg;
  const auto lg = loss_and_grad(model, x, y, std::vector<double>(y.size(), 0.0), cfg);
  EXPECT_EQ(lg.loss, 0.0);
  for (double g : lg.grad) EXPECT_EQ(g, 0.0);
}

TEST(LossAndGradTest, SinglePixelDeviationCostsItsMagnitude) {
  const auto model = GeneratorModel::make_linear(kLatent, kImage, 3);
  std::mt19937_64 gen(3);
  const auto y = testing::random_vector(kLatent.size(), gen);
  Image x = target_for(model, y);
  const double delta = 0.125;
  x.pixels()[17] += delta;
  InversionConfig cfg;
  cfg.lambda1 = 1.0;
  cfg.lambda2 = 0.0;
  const auto lg = loss_and_grad(model, x, y, std::vector<double>(y.size(), 0.0), cfg);
  EXPECT_NEAR(lg.loss, delta, 1e-12);
}

TEST(LossAndGradTest, GradientMatchesFiniteDifferencesWithFixedNoise) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model =
        trial % 2 == 0 ? GeneratorModel::make_linear(kLatent, kImage, trial)
                       : GeneratorModel::make_mlp(kLatent, kImage, {12}, trial);
    InversionConfig cfg;
    // The L1 term is non-smooth; the l2 variant keeps the central difference
    // valid, the perceptual term is smooth in both.
    cfg.loss = trial % 4 < 2 ? LossKind::l2 : LossKind::l1_perceptual;
    cfg.lambda2 = 0.3;
    const auto y = testing::random_vector(kLatent.size(), gen);
    const Image x(kImage, testing::random_vector(kImage.size(), gen, 0.2));
    const auto noise = latent_noise(y.size(), 5.0, 100 + trial);
    const auto analytic = loss_and_grad(model, x, y, noise, cfg).grad;
    const auto numeric = testing::central_gradient(
        [&](const std::vector<double>& yy) {
          return loss_and_grad(model, x, yy, noise, cfg).loss;
        },
        y, 1e-6);
    if (cfg.loss == LossKind::l2) {
      EXPECT_LT(testing::relative_error(analytic, numeric), 1e-4) << trial;
    } else {
      // A residual near zero can flip sign inside the stencil; require the
      // bulk of the gradient to agree.
      EXPECT_LT(testing::relative_error(analytic, numeric), 1e-2) << trial;
    }
  }
}

TEST(InvertTest, LinearNoiselessMatchesNormalEquations) {
  std::mt19937_64 gen(5);
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto model = GeneratorModel::make_linear(kLatent, kImage, 10 + seed);
    const auto z_star = testing::random_vector(kLatent.size(), gen);
    const Image x = target_for(model, z_star);
    const auto result = invert(model, x, noiseless_l2(), seed);

    const auto& layer = model.layers()[0];
    std::vector<double> rhs(x.pixels().begin(), x.pixels().end());
    const auto b = testing::bias_vector(layer);
    for (std::size_t k = 0; k < rhs.size(); ++k) rhs[k] -= b[k];
    const auto oracle = testing::reference_power_normalize(
        testing::normal_equations(testing::weight_matrix(layer), rhs));
    const std::vector<double> got(result.latent.values().begin(),
                                  result.latent.values().end());
    EXPECT_LT(testing::relative_error(got, oracle), 1e-4);
  }
}

TEST(InvertTest, OptimumAtInitializationStaysPut) {
  const auto model = GeneratorModel::make_linear(kLatent, kImage, 2);
  const Image x(kImage, model.forward(std::span<const double>(
                            std::vector<double>(kLatent.size(), 0.0))));
  InversionConfig cfg;
  cfg.noise_mode = NoiseMode::off;
  cfg.init = InitMode::zeros;
  const auto result = invert(model, x, cfg, 0);
  EXPECT_LE(result.state.loss_trace.back(), result.state.loss_trace.front());
  for (double v : result.latent.values()) EXPECT_EQ(v, 0.0);
}

TEST(InvertTest, LossDecreasesOnSolvableInstances) {
  std::mt19937_64 gen(6);
  for (int trial = 0; trial < 6; ++trial) {
    const auto model = trial % 2 == 0
                           ? GeneratorModel::make_linear(kLatent, kImage, trial)
                           : GeneratorModel::make_mlp(kLatent, kImage, {16}, trial);
    const Image x = target_for(model, testing::random_vector(kLatent.size(), gen));
    InversionConfig cfg;
    cfg.noise_mode = NoiseMode::off;
    cfg.step_size = 0.01;
    cfg.init = InitMode::seeded_gaussian;
    const auto result = invert(model, x, cfg, trial);
    ASSERT_EQ(result.state.loss_trace.size(), cfg.iterations);
    EXPECT_LT(result.state.loss_trace.back(), result.state.loss_trace.front());
  }
}

TEST(InvertTest, OutputHasUnitPower) {
  const auto model = GeneratorModel::make_mlp(kLatent, kImage, {16}, 1);
  std::mt19937_64 gen(7);
  const Image x = target_for(model, testing::random_vector(kLatent.size(), gen));
  InversionConfig cfg;
  cfg.iterations = 50;
  const auto result = invert(model, x, cfg, 1);
  EXPECT_NEAR(average_symbol_power(pack_real_to_complex(result.latent.values())),
              1.0, 1e-9);
}

TEST(InvertTest, SeededDeterminism) {
  const auto model = GeneratorModel::make_mlp(kLatent, kImage, {16}, 1);
  std::mt19937_64 gen(8);
  const Image x = target_for(model, testing::random_vector(kLatent.size(), gen));
  InversionConfig cfg;
  cfg.iterations = 40;
  cfg.init = InitMode::seeded_gaussian;
  const auto a = invert(model, x, cfg, 99);
  const auto b = invert(model, x, cfg, 99);
  EXPECT_EQ(a.latent, b.latent);
  EXPECT_EQ(a.state.loss_trace, b.state.loss_trace);
  const auto c = invert(model, x, cfg, 100);
  EXPECT_NE(a.latent, c.latent);
}

TEST(InvertTest, DivergenceReportsIteration) {
  const auto model = GeneratorModel::make_linear(kLatent, kImage, 1);
  Image x(kImage, 0.5);
  InversionConfig cfg;
  cfg.lambda1 = 1e308;
  cfg.loss = LossKind::l2;
  cfg.lambda2 = 0.0;
  cfg.noise_mode = NoiseMode::off;
  cfg.init = InitMode::seeded_gaussian;
  try {
    invert(model, x, cfg, 3);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.iteration(), 0u);
  }
}

TEST(InvertTest, ConfigValidation) {
  InversionConfig cfg;
  cfg.lambda1 = 0.0;
  cfg.lambda2 = 0.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = InversionConfig{};
  cfg.iterations = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = InversionConfig{};
  cfg.momentum_decay_1 = 1.0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(LatentNoiseTest, VarianceIsHalfSigmaSquared) {
  const auto n = latent_noise(200000, 0.0, 5);
  double s2 = 0.0;
  for (double v : n) s2 += v * v;
  EXPECT_NEAR(s2 / static_cast<double>(n.size()), 0.5, 0.01);
  for (double v : latent_noise(10, kInfiniteSnr, 5)) EXPECT_EQ(v, 0.0);
}

// Mean PSNR of clamp(G(z + n)) over channel draws at `snr_db`.
double channel_psnr(const GeneratorModel& model, const SemanticLatent& z,
                    const Image& x, double snr_db) {
  double acc = 0.0;
  constexpr int kDraws = 30;
  for (int d = 0; d < kDraws; ++d) {
    auto u = latent_noise(z.values().size(), snr_db, 5000 + d);
    for (std::size_t k = 0; k < u.size(); ++k) u[k] += z.values()[k];
    acc += psnr(x, Image(model.image_shape(), model.forward(std::span<const double>(u)))
                       .clamped());
  }
  return acc / kDraws;
}

TEST(InvertTest, MatchedTrainingSnrWins) {
  const LatentShape latent{8, 32};
  const ImageShape image{3, 16, 16};
  const auto model = GeneratorModel::make_mlp(latent, image, {48}, 11);
  double matched = 0.0;
  double mismatched = 0.0;
  double matched_high = 0.0;
  double mismatched_high = 0.0;
  for (int seed = 0; seed < 5; ++seed) {
    std::mt19937_64 gen(seed);
    const SemanticLatent z_star(latent, testing::random_vector(latent.size(), gen));
    const Image x = render_latent(model, z_star);
    InversionConfig cfg;
    cfg.noise_mode = NoiseMode::fresh_per_step;
    cfg.snr_db = -5.0;
    const auto low = invert(model, x, cfg, seed).latent;
    cfg.snr_db = 20.0;
    const auto high = invert(model, x, cfg, seed).latent;
    matched += channel_psnr(model, low, x, -5.0);
    mismatched += channel_psnr(model, high, x, -5.0);
    matched_high += channel_psnr(model, high, x, 20.0);
    mismatched_high += channel_psnr(model, low, x, 20.0);
  }
  EXPECT_GT(matched, mismatched);
  EXPECT_GT(matched_high, mismatched_high);
}

TEST(LossTraceCsvTest, Format) {
  std::ostringstream out;
  write_loss_trace_csv(out, std::vector<double>{2.5, 1.0});
  EXPECT_EQ(out.str(), "iteration,loss\n0,2.5\n1,1\n");
}

}  // namespace
}  // namespace semcom
