#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "semcom/channel.hpp"
#include "semcom/features.hpp"
#include "semcom/generator.hpp"
#include "semcom/latent.hpp"

namespace semcom {

enum class NoiseMode { fresh_per_step, fixed, off };
enum class InitMode { zeros, seeded_gaussian };
// l1_perceptual: lambda1 * |G - x|_1 + lambda2 * D_feat(G, x).
// l2: lambda1 * |G - x|_2^2 + lambda2 * D_feat(G, x).
enum class LossKind { l1_perceptual, l2 };

NoiseMode noise_mode_from_string(std::string_view s);
InitMode init_mode_from_string(std::string_view s);
LossKind loss_kind_from_string(std::string_view s);
std::string_view to_string(NoiseMode m);
std::string_view to_string(InitMode m);
std::string_view to_string(LossKind k);

struct InversionConfig {
  double lambda1 = 1.0;
  double lambda2 = 0.1;
  std::size_t iterations = 300;
  double step_size = 0.05;
  double momentum_decay_1 = 0.9;
  double momentum_decay_2 = 0.999;
  double epsilon = 1e-8;
  NoiseMode noise_mode = NoiseMode::fresh_per_step;
  InitMode init = InitMode::zeros;
  double init_std = 0.1;
  // Channel SNR assumed known at the transmitter.
  double snr_db = 5.0;
  LossKind loss = LossKind::l1_perceptual;
  FeatureExtractor features;

  void validate() const;
};

// Optimizer state. y is the pre-normalization variable.
struct InversionState {
  std::vector<double> y;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::size_t step_count = 0;
  std::vector<double> loss_trace;
};

struct LossAndGrad {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d y, latent-shaped
};

// Vector-Jacobian product of the normalization y -> PN(y). The Jacobian is
// c (I - y y^T / |y|^2) with c = sqrt(L/2)/|y|; at y = 0 (where PN is the
// identity by convention) it is I.
std::vector<double> power_normalize_vjp(std::span<const double> y,
                                        std::span<const double> upstream);

// Objective evaluated at G(PN(y) + noise). Noise is treated as a constant.
// The L1 subgradient uses sign(0) = 0. Throws InvalidArgument on non-finite
// values.
LossAndGrad loss_and_grad(const GeneratorModel& model, const Image& x,
                          std::span<const double> y,
                          std::span<const double> noise,
                          const InversionConfig& cfg);

// Latent-space noise for one step: i.i.d. N(0, sigma^2/2) per real
// component, sigma^2 = noise_variance(snr_db).
std::vector<double> latent_noise(std::size_t size, double snr_db,
                                 std::uint64_t seed);

struct InversionResult {
  SemanticLatent latent;  // PN(y*), unit average power per packed symbol
  InversionState state;
};

// Minimizes the channel-aware objective with bias-corrected adaptive moment
// steps and returns PN(y*). Throws DivergenceError (with the iteration) when
// the loss turns non-finite.
InversionResult invert(const GeneratorModel& model, const Image& x,
                       const InversionConfig& cfg, std::uint64_t seed);

void write_loss_trace_csv(std::ostream& out, std::span<const double> trace);

}  // namespace semcom
