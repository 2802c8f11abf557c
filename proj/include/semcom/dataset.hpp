#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "semcom/generator.hpp"
#include "semcom/latent.hpp"

namespace semcom {

// Clustered latent source that induces cache hits. Each slot owns a bank of
// P prototypes drawn up front; every image, each slot independently reuses a
// uniformly chosen bank prototype with probability reuse_prob, otherwise it
// draws a fresh one-off prototype. Gaussian perturbation is added on top.
// Prototype entries are standard normal.
struct SyntheticSourceSpec {
  std::size_t prototypes_per_slot = 4;
  double reuse_prob = 0.7;
  double perturbation_std = 0.01;

  void validate() const;
};

struct SourceSequence {
  LatentShape shape;
  std::vector<SemanticLatent> latents;  // ground-truth z*
  // Either empty or one image per latent.
  std::vector<Image> images;
  // reused[n][i]: slot i of item n came from its prototype bank.
  // Populated by the synthetic generator only.
  std::vector<std::vector<bool>> reused;

  std::size_t size() const { return latents.size(); }
};

// Item n depends only on (seed, n) and the prototype bank, so any prefix of
// a longer sequence equals the shorter sequence. When `model` is given,
// images are clamp(G(PN(z*))).
SourceSequence generate_source_sequence(const SyntheticSourceSpec& spec,
                                        LatentShape shape, std::size_t count,
                                        std::uint64_t seed,
                                        const GeneratorModel* model = nullptr);

// clamp(G(PN(z))) for one latent.
Image render_latent(const GeneratorModel& model, const SemanticLatent& z);

// Manifest (format, dims, counts, dtype tag, checksum) plus a flat binary:
// all latents row-major, then all images channel-major when present.
// f32le (default) or f64le.
void save_dataset(const SourceSequence& seq,
                  const std::filesystem::path& manifest_path,
                  const std::string& dtype = "f32le");

// Throws FormatError naming the offending field; odd slot_len, truncated
// binaries, checksum mismatches and out-of-range pixels are rejected.
SourceSequence load_dataset(const std::filesystem::path& manifest_path);

}  // namespace semcom
