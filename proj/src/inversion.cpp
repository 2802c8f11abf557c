#include "semcom/inversion.hpp"

#include <cmath>
#include <ostream>
#include <string>

#include "semcom/accounting.hpp"
#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

NoiseMode noise_mode_from_string(std::string_view s) {
  if (s == "fresh_per_step") return NoiseMode::fresh_per_step;
  if (s == "fixed") return NoiseMode::fixed;
  if (s == "off") return NoiseMode::off;
  throw InvalidArgument("unknown noise_mode '" + std::string(s) + "'");
}

InitMode init_mode_from_string(std::string_view s) {
  if (s == "zeros") return InitMode::zeros;
  if (s == "seeded_gaussian") return InitMode::seeded_gaussian;
  throw InvalidArgument("unknown init '" + std::string(s) + "'");
}

LossKind loss_kind_from_string(std::string_view s) {
  if (s == "l1_perceptual") return LossKind::l1_perceptual;
  if (s == "l2") return LossKind::l2;
  throw InvalidArgument("unknown loss '" + std::string(s) + "'");
}

std::string_view to_string(NoiseMode m) {
  switch (m) {
    case NoiseMode::fresh_per_step: return "fresh_per_step";
    case NoiseMode::fixed: return "fixed";
    case NoiseMode::off: return "off";
  }
  return "?";
}

std::string_view to_string(InitMode m) {
  return m == InitMode::zeros ? "zeros" : "seeded_gaussian";
}

std::string_view to_string(LossKind k) {
  return k == LossKind::l1_perceptual ? "l1_perceptual" : "l2";
}

void InversionConfig::validate() const {
  if (!(lambda1 >= 0.0) || !(lambda2 >= 0.0) || !(lambda1 + lambda2 > 0.0)) {
    throw InvalidArgument("inversion: lambda1, lambda2 >= 0 with a positive sum");
  }
  if (iterations < 1) throw InvalidArgument("inversion: iterations must be >= 1");
  if (!(step_size > 0.0)) throw InvalidArgument("inversion: step_size must be > 0");
  if (!(momentum_decay_1 >= 0.0 && momentum_decay_1 < 1.0) ||
      !(momentum_decay_2 >= 0.0 && momentum_decay_2 < 1.0)) {
    throw InvalidArgument("inversion: momentum decays must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw InvalidArgument("inversion: epsilon must be > 0");
  if (!(init_std >= 0.0)) throw InvalidArgument("inversion: init_std must be >= 0");
  if (std::isnan(snr_db)) throw InvalidArgument("inversion: snr_db is NaN");
  if (lambda2 > 0.0) features.validate();
}

std::vector<double> power_normalize_vjp(std::span<const double> y,
                                        std::span<const double> upstream) {
  if (y.size() != upstream.size()) {
    throw InvalidArgument("power_normalize_vjp: size mismatch");
  }
  double yy = 0.0;
  double yg = 0.0;
  for (std::size_t k = 0; k < y.size(); ++k) {
    yy += y[k] * y[k];
    yg += y[k] * upstream[k];
  }
  std::vector<double> out(upstream.begin(), upstream.end());
  if (yy == 0.0) return out;
  const double norm = std::sqrt(yy);
  const double c = std::sqrt(0.5 * static_cast<double>(y.size())) / norm;
  const double proj = yg / yy;
  for (std::size_t k = 0; k < y.size(); ++k) {
    out[k] = c * (upstream[k] - y[k] * proj);
  }
  return out;
}

LossAndGrad loss_and_grad(const GeneratorModel& model, const Image& x,
                          std::span<const double> y,
                          std::span<const double> noise,
                          const InversionConfig& cfg) {
  if (x.shape() != model.image_shape()) {
    throw InvalidArgument("loss_and_grad: image shape mismatch");
  }
  if (y.size() != model.latent_shape().size() || noise.size() != y.size()) {
    throw InvalidArgument("loss_and_grad: latent shape mismatch");
  }
  std::vector<double> u = power_normalize(y).values;
  for (std::size_t k = 0; k < u.size(); ++k) u[k] += noise[k];

  const Image g(model.image_shape(), model.forward(u));
  const auto gp = g.pixels();
  const auto xp = x.pixels();

  double data_term = 0.0;
  std::vector<double> upstream(gp.size());
  for (std::size_t k = 0; k < gp.size(); ++k) {
    const double r = gp[k] - xp[k];
    if (cfg.loss == LossKind::l1_perceptual) {
      data_term += std::abs(r);
      upstream[k] = cfg.lambda1 * static_cast<double>((r > 0.0) - (r < 0.0));
    } else {
      data_term += r * r;
      upstream[k] = 2.0 * cfg.lambda1 * r;
    }
  }
  double loss = cfg.lambda1 * data_term;
  if (cfg.lambda2 > 0.0) {
    loss += cfg.lambda2 * perceptual_distance(cfg.features, g, x);
    const auto dg = feature_distance_gradient(cfg.features, g, x);
    for (std::size_t k = 0; k < upstream.size(); ++k) {
      upstream[k] += cfg.lambda2 * dg[k];
    }
  }
  if (!std::isfinite(loss)) throw InvalidArgument("non-finite loss");

  const auto grad_u = model.backward(u, upstream);
  LossAndGrad out{loss, power_normalize_vjp(y, grad_u)};
  for (double v : out.grad) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite gradient");
  }
  return out;
}

std::vector<double> latent_noise(std::size_t size, double snr_db,
                                 std::uint64_t seed) {
  std::vector<double> n(size, 0.0);
  const double var = noise_variance(snr_db);
  if (var == 0.0) return n;
  const double stddev = std::sqrt(var / 2.0);
  CounterRng rng(seed);
  for (double& v : n) v = stddev * rng.gaussian();
  return n;
}

InversionResult invert(const GeneratorModel& model, const Image& x,
                       const InversionConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (x.shape() != model.image_shape()) {
    throw InvalidArgument("invert: image shape does not match generator");
  }
  const std::size_t n = model.latent_shape().size();
  InversionState st;
  st.y.assign(n, 0.0);
  st.first_moment.assign(n, 0.0);
  st.second_moment.assign(n, 0.0);
  st.loss_trace.reserve(cfg.iterations);
  if (cfg.init == InitMode::seeded_gaussian) {
    CounterRng rng(derive_seed(seed, "inversion.init"));
    for (double& v : st.y) v = cfg.init_std * rng.gaussian();
  }

  const std::uint64_t noise_seed = derive_seed(seed, "inversion.noise");
  std::vector<double> noise(n, 0.0);
  if (cfg.noise_mode == NoiseMode::fixed) {
    noise = latent_noise(n, cfg.snr_db, noise_seed);
  }

  const double b1 = cfg.momentum_decay_1;
  const double b2 = cfg.momentum_decay_2;
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    if (cfg.noise_mode == NoiseMode::fresh_per_step) {
      noise = latent_noise(n, cfg.snr_db,
                           splitmix64_mix(noise_seed + it));
    }
    LossAndGrad lg;
    try {
      lg = loss_and_grad(model, x, st.y, noise, cfg);
    } catch (const InvalidArgument& e) {
      throw DivergenceError("inversion diverged at iteration " +
                                std::to_string(it) + ": " + e.what(),
                            it);
    }
    st.loss_trace.push_back(lg.loss);
    ++st.step_count;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(st.step_count));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(st.step_count));
    for (std::size_t k = 0; k < n; ++k) {
      const double g = lg.grad[k];
      st.first_moment[k] = b1 * st.first_moment[k] + (1.0 - b1) * g;
      st.second_moment[k] = b2 * st.second_moment[k] + (1.0 - b2) * g * g;
      const double m_hat = st.first_moment[k] / c1;
      const double v_hat = st.second_moment[k] / c2;
      st.y[k] -= cfg.step_size * m_hat / (std::sqrt(v_hat) + cfg.epsilon);
    }
    for (double v : st.y) {
      if (!std::isfinite(v)) {
        throw DivergenceError("inversion diverged at iteration " +
                                  std::to_string(it) + ": non-finite latent",
                              it);
      }
    }
  }

  SemanticLatent z(model.latent_shape(), power_normalize(st.y).values);
  return {std::move(z), std::move(st)};
}

void write_loss_trace_csv(std::ostream& out, std::span<const double> trace) {
  out << "iteration,loss\n";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    out << i << ',' << format_double(trace[i]) << '\n';
  }
}

}  // namespace semcom
