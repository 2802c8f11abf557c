#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "semcom/cache.hpp"
#include "semcom/features.hpp"
#include "semcom/latent.hpp"

namespace semcom {

class CounterRng;

// Reliable digital side channel that carries (slot, cache index) pairs.
struct SideChannelModel {
  double code_rate = 0.5;
  std::uint32_t bits_per_symbol = 1;  // BPSK
  double success_prob = 0.9;          // per-block delivery probability p
  // Draw the retransmission count instead of charging its expectation 1/p.
  bool sample_retransmissions = false;

  void validate() const;
};

// ceil(log2 n), with ceil_log2(1) = 0.
std::uint32_t ceil_log2(std::uint64_t n);

// ceil(log2 N_S) + ceil(log2 N_C).
std::uint32_t index_bits(std::size_t n_slots, std::size_t cache_capacity);

// Expected channel uses for one index: B / (rate * bits_per_symbol * p).
double per_index_symbols(std::size_t n_slots, std::size_t cache_capacity,
                         const SideChannelModel& sc);

// Expected channel uses for n_hits indices.
double index_cost_symbols(std::size_t n_hits, std::size_t n_slots,
                          std::size_t cache_capacity,
                          const SideChannelModel& sc);

// Same message cost, but with a geometric(p) number of transmissions drawn
// from rng instead of the 1/p expectation.
double sampled_index_cost_symbols(std::size_t n_hits, std::size_t n_slots,
                                  std::size_t cache_capacity,
                                  const SideChannelModel& sc, CounterRng& rng);

// k / (C * H * W).
double bcr(double k_total, const ImageShape& image);

inline constexpr double kPsnrCapDb = 100.0;

// 10 log10(255^2 / MSE) on pixels scaled to [0, 255], capped at 100 dB
// (identical images report the cap).
double psnr(const Image& x, const Image& x_hat);
double mse(const Image& x, const Image& x_hat);

double perceptual_distance(const FeatureExtractor& fe, const Image& x,
                           const Image& x_hat);

struct TransmissionRecord {
  std::size_t image_index = 0;
  std::size_t n_s = 0;
  std::size_t payload_symbols = 0;  // n_s * N_L / 2
  double index_symbols = 0.0;
  double k_total = 0.0;
  double bcr = 0.0;
  double psnr_db = 0.0;
  double perceptual_distance = 0.0;
  std::vector<HitRef> hits;

  bool operator==(const TransmissionRecord&) const = default;
};

// image_index,n_s,n_hits,payload_symbols,index_symbols,k_total,bcr,psnr_db,
// perceptual_distance,hits  (hits = "slot:index:similarity" joined by ';')
extern const char* const kRecordCsvHeader;

void write_records_csv(std::ostream& out,
                       const std::vector<TransmissionRecord>& records);
void write_records_jsonl(std::ostream& out,
                         const std::vector<TransmissionRecord>& records);
nlohmann::json to_json(const TransmissionRecord& record);

// Shortest round-trip representation of a double.
std::string format_double(double value);

}  // namespace semcom
