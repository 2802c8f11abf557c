#pragma once

#include <cstdint>
#include <string_view>

namespace semcom {

// Counter-based generator: the n-th draw of a stream keyed by `key` is
// splitmix64_mix(key + (n + 1) * 0x9E3779B97F4A7C15). This is exactly the
// SplitMix64 sequence, so any draw can be recomputed from (key, counter)
// without replaying the stream. Gaussians use the Box-Muller transform and
// consume two uniforms each (the sine branch is discarded).
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key, std::uint64_t counter = 0)
      : key_(key), counter_(counter) {}

  std::uint64_t next_u64();
  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform();
  // Uniform on (0, 1], safe as a log argument.
  double uniform_open();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double gaussian();
  // Uniform integer on [0, n). n must be positive.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_;
};

std::uint64_t splitmix64_mix(std::uint64_t z);

// Seed splitting rule: derive_seed(master, label) =
//   splitmix64_mix(master ^ fnv1a64(label)).
// Each pipeline stage draws from its own label so changing one stage's
// randomness never perturbs another.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label);

// Sub-stream for the n-th item of a stage, e.g. the n-th channel use.
std::uint64_t derive_seed(std::uint64_t master, std::string_view label,
                          std::uint64_t index);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace semcom
