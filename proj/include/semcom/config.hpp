#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "semcom/accounting.hpp"
#include "semcom/cache.hpp"
#include "semcom/dataset.hpp"
#include "semcom/generator.hpp"
#include "semcom/inversion.hpp"
#include "semcom/latent.hpp"

namespace semcom {

enum class SimulationMode { latent_only, full_inversion };

struct GeneratorSpec {
  GeneratorKind kind = GeneratorKind::linear;
  std::vector<std::size_t> hidden{64};  // mlp only
  // Derived from the master seed when absent.
  std::optional<std::uint64_t> seed;
  // When set, weights are loaded from this manifest instead of synthesized.
  std::string weights;
};

struct SourceSpec {
  enum class Kind { synthetic, dataset };
  Kind kind = Kind::synthetic;
  SyntheticSourceSpec synthetic;
  std::string dataset_path;
};

// Desk-scale defaults: N_S = 8, N_L = 32, N_C = 16, 3x32x32 images,
// gamma = 0.9 on every slot.
struct SimulationConfig {
  LatentShape latent{8, 32};
  std::size_t cache_capacity = 16;
  ImageShape image{3, 32, 32};
  GeneratorSpec generator;
  ThresholdProfile thresholds = ThresholdProfile::uniform(8, 0.9);
  double snr_db = 5.0;
  SideChannelModel side_channel;
  InversionConfig inversion;
  std::size_t num_images = 100;
  SourceSpec source;
  std::uint64_t master_seed = 1;
  SimulationMode mode = SimulationMode::latent_only;
  std::size_t report_window = 10;
  // Directory holding tx_cache.json / rx_cache.json from an earlier run.
  std::string resume_from;

  // Full-scale dimensions (28 x 512 latents, N_C = 50, 3x512x512 images,
  // face threshold profile) for accounting-only runs.
  static SimulationConfig full_scale();

  // Throws ConfigError listing every violation.
  void validate() const;
};

nlohmann::json to_json(const SimulationConfig& cfg);

// Parses a JSON document on top of the defaults. Unknown keys, wrong types
// and invariant violations are all collected into one ConfigError.
SimulationConfig config_from_json(const nlohmann::json& doc);

// Applies "dotted.key=value" overrides to a config document. The key must
// already exist in the fully-populated document; values are parsed as JSON
// and fall back to plain strings ("inf", "never", ...).
nlohmann::json apply_overrides(nlohmann::json doc,
                               const std::vector<std::string>& overrides);

// Reads a config file (or defaults when path is empty), applies overrides,
// and validates.
SimulationConfig load_config(const std::string& path,
                             const std::vector<std::string>& overrides,
                             std::optional<std::uint64_t> seed_override = {});

// Hex FNV-1a of the canonical JSON form.
std::string config_hash(const SimulationConfig& cfg);

}  // namespace semcom
