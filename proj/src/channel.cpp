#include "semcom/channel.hpp"

#include <cmath>

#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

double noise_variance(double snr_db) {
  if (std::isnan(snr_db)) throw InvalidArgument("snr_db is NaN");
  if (snr_db == kInfiniteSnr) return 0.0;
  return std::pow(10.0, -snr_db / 10.0);
}

ComplexBlock transmit(const ComplexBlock& block, const ChannelConfig& cfg,
                      std::uint64_t transmission_index) {
  for (const auto& s : block) {
    if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
      throw InvalidArgument("non-finite channel input");
    }
  }
  const double var = noise_variance(cfg.snr_db);
  if (var == 0.0) return block;
  const double stddev = std::sqrt(var / 2.0);
  CounterRng rng(derive_seed(cfg.seed, "channel", transmission_index));
  ComplexBlock out(block.size());
  for (std::size_t m = 0; m < block.size(); ++m) {
    const double re = rng.gaussian();
    const double im = rng.gaussian();
    out[m] = block[m] + std::complex<double>(stddev * re, stddev * im);
  }
  return out;
}

}  // namespace semcom
