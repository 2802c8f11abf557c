#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcom/accounting.hpp"
#include "semcom/cache.hpp"
#include "semcom/config.hpp"
#include "semcom/dataset.hpp"
#include "semcom/features.hpp"
#include "semcom/generator.hpp"

namespace semcom {

inline constexpr const char* kVersion = "0.1.0";

// Mutable state of one transmitter/receiver pair over a run.
struct LinkState {
  CacheMemory tx_cache;
  CacheMemory rx_cache;
  std::size_t images_sent = 0;
  // Applied to the plan after the transmitter commits its cache update and
  // before the receiver sees the indices. Test-only tampering point.
  std::function<void(TransmissionPlan&)> index_tamper;

  static LinkState cold(const SimulationConfig& cfg);
};

struct TransmitResult {
  Image x_hat;
  SemanticLatent z_hat;
  TransmissionRecord record;
};

// One image through the full chain: latent extraction (inversion, or
// PN(truth) in latent_only mode), cache planning, transmitter cache update,
// payload normalization and packing, AWGN, index accounting, receiver
// reconstruction and cache update, generation.
//
// The transmitter caches the normalized payload vectors it actually puts on
// the air; the receiver caches what it receives. At infinite SNR the two
// caches therefore stay bit-identical.
TransmitResult transmit_image(const Image& x, const SemanticLatent* truth,
                              LinkState& link, const GeneratorModel& model,
                              const SimulationConfig& cfg);

struct RunSummary {
  std::size_t num_images = 0;
  double mean_bcr = 0.0;
  double min_bcr = 0.0;
  double max_bcr = 0.0;
  double first_bcr = 0.0;
  double mean_psnr_db = 0.0;
  double mean_perceptual_distance = 0.0;
  double mean_hits = 0.0;
  double mean_n_s = 0.0;
  double mean_index_symbols = 0.0;
  std::size_t window = 10;
  std::vector<double> bcr_moving_average;
};

struct RunResult {
  std::vector<TransmissionRecord> records;
  RunSummary summary;
  LinkState link;
};

// Trailing moving average; entry n averages items max(0, n-window+1)..n.
std::vector<double> moving_average(const std::vector<double>& values,
                                   std::size_t window);

RunSummary summarize(const std::vector<TransmissionRecord>& records,
                     std::size_t window);

GeneratorModel build_generator(const SimulationConfig& cfg);
SourceSequence build_source(const SimulationConfig& cfg,
                            const GeneratorModel& model);

// Sequential, deterministic per master_seed.
RunResult run_sequence(const SimulationConfig& cfg);
RunResult run_sequence(const SimulationConfig& cfg, const GeneratorModel& model,
                       const SourceSequence& source, LinkState link);

nlohmann::json to_json(const RunSummary& summary);

// Summary plus a provenance block (config hash, seed, version).
nlohmann::json summary_document(const SimulationConfig& cfg,
                                const RunSummary& summary);

}  // namespace semcom
