#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace semcom::cli {

// Exit-code contract.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // usage errors, partial sweep failure
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

// Environment variable naming the default output root.
inline constexpr const char* kOutRootEnv = "SEMCOM_OUT_ROOT";

struct CommonOptions {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int simulate(const CommonOptions& opts, std::size_t window, std::ostream& err);

int invert(const CommonOptions& opts, const std::string& dataset,
           std::size_t first, std::size_t count, std::ostream& err);

int gen_dataset(const CommonOptions& opts, std::optional<std::size_t> count,
                const std::string& dtype, std::ostream& err);

int report(const std::vector<std::string>& records, const std::string& sweep_index,
           std::size_t window, const std::string& out, std::ostream& err);

struct SweepAxes {
  std::vector<double> snr_db;
  std::vector<std::uint64_t> seeds;
};

int sweep(const CommonOptions& opts, const SweepAxes& axes, std::size_t jobs,
          std::ostream& err);

// Directory name of one sweep cell, e.g. "snr_5_seed_2".
std::string cell_name(double snr_db, std::uint64_t seed);

// Resolves --out, falling back to $SEMCOM_OUT_ROOT/<subcommand> and then
// ./semcom-out/<subcommand>.
std::filesystem::path resolve_out(const std::string& out,
                                  const std::string& subcommand);

// Full argv entry point.
int run(int argc, const char* const* argv, std::ostream& err);

}  // namespace semcom::cli
