#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "semcom/latent.hpp"

namespace semcom {

// u.v / (|u||v|), or 0 when either vector has zero norm.
// Throws InvalidArgument on length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

class CacheMemory;
CacheMemory load_cache(const std::filesystem::path& manifest_path);

// Per-slot FIFO memories. Entry j of a slot is its j-th oldest surviving
// vector (0 = oldest); both parties compute positions the same way, so a
// position is a valid index on the wire.
class CacheMemory {
 public:
  CacheMemory() = default;
  CacheMemory(std::size_t n_slots, std::size_t slot_len, std::size_t capacity);

  std::size_t n_slots() const { return slots_.size(); }
  std::size_t slot_len() const { return slot_len_; }
  std::size_t capacity() const { return capacity_; }

  std::size_t occupancy(std::size_t slot) const;
  std::size_t total_occupancy() const;
  std::span<const double> entry(std::size_t slot, std::size_t index) const;
  // Count of all insertions ever made into the slot, evicted ones included.
  std::uint64_t insertions(std::size_t slot) const;

  // Appends, evicting the oldest entry when the slot is full.
  void insert(std::size_t slot, std::span<const double> vector);

  bool operator==(const CacheMemory&) const = default;

 private:
  friend CacheMemory load_cache(const std::filesystem::path& manifest_path);

  std::size_t slot_len_ = 0;
  std::size_t capacity_ = 0;
  std::vector<std::deque<std::vector<double>>> slots_;
  std::vector<std::uint64_t> insertions_;
};

// Per-slot similarity thresholds; std::nullopt disables caching for a slot.
struct ThresholdProfile {
  std::vector<std::optional<double>> gamma;

  static ThresholdProfile uniform(std::size_t n_slots, double value);
  static ThresholdProfile never(std::size_t n_slots);
  // 0.95 on slots 6..13, 0.8 elsewhere.
  static ThresholdProfile face_default(std::size_t n_slots);
};

struct CacheMatch {
  std::size_t index = 0;
  double similarity = 0.0;
};

struct KeptVector {
  std::size_t slot = 0;
  std::vector<double> vector;
};

struct HitRef {
  std::size_t slot = 0;
  std::size_t index = 0;
  double similarity = 0.0;

  bool operator==(const HitRef&) const = default;
};

struct TransmissionPlan {
  std::vector<KeptVector> kept;  // misses, ascending slot order
  std::vector<HitRef> hits;      // ascending slot order

  std::size_t n_s() const { return kept.size(); }
};

// Argmax cosine over the occupied entries of a slot; ties go to the smallest
// index. Empty slot -> nullopt.
std::optional<CacheMatch> lookup(const CacheMemory& cache, std::size_t slot,
                                 std::span<const double> query);

// Slot i is a hit iff its best match has similarity >= gamma_i.
TransmissionPlan plan_transmission(const SemanticLatent& z,
                                   const CacheMemory& cache,
                                   const ThresholdProfile& thresholds);

// Inserts exactly the kept vectors; hits leave the cache untouched.
void tx_update(CacheMemory& cache, const TransmissionPlan& plan);

// Rebuilds the full latent from received miss vectors (in ascending slot
// order of the slots not named in `hits`) and cached entries, then inserts
// the received vectors into the receiver cache. Inconsistent references
// raise ProtocolDesyncError and leave the cache unchanged.
SemanticLatent rx_reconstruct(LatentShape shape,
                              std::span<const std::vector<double>> received,
                              std::span<const HitRef> hits,
                              CacheMemory& cache);

// Manifest + f64le binary; entries stored slot by slot, oldest first.
void save_cache(const CacheMemory& cache,
                const std::filesystem::path& manifest_path);
CacheMemory load_cache(const std::filesystem::path& manifest_path);

}  // namespace semcom
