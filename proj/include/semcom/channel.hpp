#pragma once

#include <cstdint>
#include <limits>

#include "semcom/latent.hpp"

namespace semcom {

// Noiseless channel: snr_db = +infinity.
inline constexpr double kInfiniteSnr = std::numeric_limits<double>::infinity();

struct ChannelConfig {
  double snr_db = 5.0;
  std::uint64_t seed = 0;
};

// sigma^2 = 10^(-snr_db/10) per complex symbol, for unit transmit power.
// Returns 0 for +infinity.
double noise_variance(double snr_db);

// AWGN: adds CN(0, sigma^2) to every symbol, i.e. N(0, sigma^2/2) on each of
// the real and imaginary parts. The noise stream is keyed on
// (cfg.seed, transmission_index), so transmissions can be evaluated in any
// order and still get the same realizations. At infinite SNR the block is
// returned bit-identical.
ComplexBlock transmit(const ComplexBlock& block, const ChannelConfig& cfg,
                      std::uint64_t transmission_index = 0);

}  // namespace semcom
