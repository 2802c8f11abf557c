#include "semcom/cache.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bundle.hpp"
#include "semcom/error.hpp"

namespace semcom {

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size()) {
    throw InvalidArgument("cosine: length mismatch (" +
                          std::to_string(u.size()) + " vs " +
                          std::to_string(v.size()) + ")");
  }
  double dot = 0.0;
  double uu = 0.0;
  double vv = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    dot += u[k] * v[k];
    uu += u[k] * u[k];
    vv += v[k] * v[k];
  }
  if (uu == 0.0 || vv == 0.0) return 0.0;
  const double c = dot / (std::sqrt(uu) * std::sqrt(vv));
  return std::clamp(c, -1.0, 1.0);
}

CacheMemory::CacheMemory(std::size_t n_slots, std::size_t slot_len,
                         std::size_t capacity)
    : slot_len_(slot_len),
      capacity_(capacity),
      slots_(n_slots),
      insertions_(n_slots, 0) {
  if (capacity == 0) throw InvalidArgument("cache capacity must be positive");
}

std::size_t CacheMemory::occupancy(std::size_t slot) const {
  return slots_.at(slot).size();
}

std::size_t CacheMemory::total_occupancy() const {
  std::size_t n = 0;
  for (const auto& s : slots_) n += s.size();
  return n;
}

std::span<const double> CacheMemory::entry(std::size_t slot,
                                           std::size_t index) const {
  return slots_.at(slot).at(index);
}

std::uint64_t CacheMemory::insertions(std::size_t slot) const {
  return insertions_.at(slot);
}

void CacheMemory::insert(std::size_t slot, std::span<const double> vector) {
  if (vector.size() != slot_len_) {
    throw InvalidArgument("cache insert: vector length " +
                          std::to_string(vector.size()) + ", slot length " +
                          std::to_string(slot_len_));
  }
  for (double x : vector) {
    if (!std::isfinite(x)) throw InvalidArgument("cache insert: non-finite");
  }
  auto& buf = slots_.at(slot);
  if (buf.size() == capacity_) buf.pop_front();
  buf.emplace_back(vector.begin(), vector.end());
  ++insertions_[slot];
}

ThresholdProfile ThresholdProfile::uniform(std::size_t n_slots, double value) {
  return {std::vector<std::optional<double>>(n_slots, value)};
}

ThresholdProfile ThresholdProfile::never(std::size_t n_slots) {
  return {std::vector<std::optional<double>>(n_slots, std::nullopt)};
}

ThresholdProfile ThresholdProfile::face_default(std::size_t n_slots) {
  ThresholdProfile p = uniform(n_slots, 0.8);
  for (std::size_t i = 6; i <= 13 && i < n_slots; ++i) p.gamma[i] = 0.95;
  return p;
}

std::optional<CacheMatch> lookup(const CacheMemory& cache, std::size_t slot,
                                 std::span<const double> query) {
  if (slot >= cache.n_slots()) {
    throw InvalidArgument("lookup: slot " + std::to_string(slot) +
                          " out of range");
  }
  std::optional<CacheMatch> best;
  for (std::size_t j = 0; j < cache.occupancy(slot); ++j) {
    const double sim = cosine(query, cache.entry(slot, j));
    if (!best || sim > best->similarity) best = CacheMatch{j, sim};
  }
  return best;
}

TransmissionPlan plan_transmission(const SemanticLatent& z,
                                   const CacheMemory& cache,
                                   const ThresholdProfile& thresholds) {
  if (z.n_slots() != cache.n_slots() || z.slot_len() != cache.slot_len() ||
      thresholds.gamma.size() != z.n_slots()) {
    throw InvalidArgument("plan_transmission: shape mismatch");
  }
  TransmissionPlan plan;
  for (std::size_t i = 0; i < z.n_slots(); ++i) {
    const auto row = z.row(i);
    if (const auto& gamma = thresholds.gamma[i]) {
      if (const auto match = lookup(cache, i, row);
          match && match->similarity >= *gamma) {
        plan.hits.push_back({i, match->index, match->similarity});
        continue;
      }
    }
    plan.kept.push_back({i, std::vector<double>(row.begin(), row.end())});
  }
  return plan;
}

void tx_update(CacheMemory& cache, const TransmissionPlan& plan) {
  for (const auto& k : plan.kept) cache.insert(k.slot, k.vector);
}

SemanticLatent rx_reconstruct(LatentShape shape,
                              std::span<const std::vector<double>> received,
                              std::span<const HitRef> hits,
                              CacheMemory& cache) {
  if (cache.n_slots() != shape.n_slots || cache.slot_len() != shape.slot_len) {
    throw InvalidArgument("rx_reconstruct: cache shape mismatch");
  }
  std::vector<bool> is_hit(shape.n_slots, false);
  for (const auto& h : hits) {
    if (h.slot >= shape.n_slots) {
      throw ProtocolDesyncError("hit references slot " +
                                std::to_string(h.slot) + " of " +
                                std::to_string(shape.n_slots));
    }
    if (is_hit[h.slot]) {
      throw ProtocolDesyncError("slot " + std::to_string(h.slot) +
                                " referenced twice");
    }
    if (h.index >= cache.occupancy(h.slot)) {
      throw ProtocolDesyncError(
          "hit references slot " + std::to_string(h.slot) + " index " +
          std::to_string(h.index) + " but receiver cache holds " +
          std::to_string(cache.occupancy(h.slot)) + " entries");
    }
    is_hit[h.slot] = true;
  }
  if (received.size() + hits.size() != shape.n_slots) {
    throw ProtocolDesyncError(
        "received " + std::to_string(received.size()) + " vectors and " +
        std::to_string(hits.size()) + " indices for " +
        std::to_string(shape.n_slots) + " slots");
  }
  for (const auto& v : received) {
    if (v.size() != shape.slot_len) {
      throw ProtocolDesyncError("received vector has wrong length");
    }
  }

  SemanticLatent out(shape);
  for (const auto& h : hits) {
    const auto src = cache.entry(h.slot, h.index);
    std::copy(src.begin(), src.end(), out.row(h.slot).begin());
  }
  std::vector<std::size_t> miss_slots;
  for (std::size_t i = 0; i < shape.n_slots; ++i) {
    if (!is_hit[i]) miss_slots.push_back(i);
  }
  for (std::size_t m = 0; m < miss_slots.size(); ++m) {
    std::copy(received[m].begin(), received[m].end(),
              out.row(miss_slots[m]).begin());
  }
  if (!out.all_finite()) throw InvalidArgument("non-finite received latent");
  for (std::size_t m = 0; m < miss_slots.size(); ++m) {
    cache.insert(miss_slots[m], received[m]);
  }
  return out;
}

void save_cache(const CacheMemory& cache,
                const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  manifest["format"] = "semcom-cache";
  manifest["version"] = 1;
  manifest["dtype"] = "f64le";
  manifest["n_slots"] = cache.n_slots();
  manifest["slot_len"] = cache.slot_len();
  manifest["capacity"] = cache.capacity();
  std::vector<std::size_t> occupancy;
  std::vector<std::uint64_t> insertions;
  std::vector<unsigned char> bytes;
  for (std::size_t i = 0; i < cache.n_slots(); ++i) {
    occupancy.push_back(cache.occupancy(i));
    insertions.push_back(cache.insertions(i));
    for (std::size_t j = 0; j < cache.occupancy(i); ++j) {
      for (double x : cache.entry(i, j)) detail::append_f64le(bytes, x);
    }
  }
  manifest["occupancy"] = occupancy;
  manifest["insertions"] = insertions;
  detail::write_bundle(manifest_path, std::move(manifest), bytes);
}

CacheMemory load_cache(const std::filesystem::path& manifest_path) {
  auto bundle = detail::read_bundle(manifest_path, "semcom-cache");
  const auto& m = bundle.manifest;
  const std::string dtype = detail::require_string(m, "dtype");
  const std::size_t width = detail::dtype_width(dtype);
  const auto n_slots = detail::require_uint(m, "n_slots");
  const auto slot_len = detail::require_uint(m, "slot_len");
  const auto capacity = detail::require_uint(m, "capacity");
  if (capacity == 0) throw FormatError("field 'capacity': must be positive");
  if (!m.contains("occupancy") || !m["occupancy"].is_array() ||
      m["occupancy"].size() != n_slots) {
    throw FormatError("field 'occupancy': missing or wrong length");
  }
  const auto occupancy = m["occupancy"].get<std::vector<std::size_t>>();
  std::vector<std::uint64_t> insertions(occupancy.begin(), occupancy.end());
  if (m.contains("insertions")) {
    insertions = m["insertions"].get<std::vector<std::uint64_t>>();
    if (insertions.size() != n_slots) {
      throw FormatError("field 'insertions': wrong length");
    }
  }
  std::size_t expected = 0;
  for (std::size_t i = 0; i < n_slots; ++i) {
    if (occupancy[i] > capacity) {
      throw FormatError("field 'occupancy': slot " + std::to_string(i) +
                        " exceeds capacity");
    }
    expected += occupancy[i] * slot_len * width;
  }
  if (expected != bundle.bytes.size()) {
    throw FormatError("field 'occupancy': implies " + std::to_string(expected) +
                      " bytes, binary has " +
                      std::to_string(bundle.bytes.size()));
  }

  CacheMemory cache(n_slots, slot_len, capacity);
  std::size_t offset = 0;
  std::vector<double> v(slot_len);
  for (std::size_t i = 0; i < n_slots; ++i) {
    for (std::size_t j = 0; j < occupancy[i]; ++j) {
      for (auto& x : v) {
        x = width == 4 ? detail::read_f32le(bundle.bytes, offset)
                       : detail::read_f64le(bundle.bytes, offset);
        offset += width;
      }
      cache.insert(i, v);
    }
  }
  for (std::size_t i = 0; i < n_slots; ++i) {
    if (insertions[i] < occupancy[i]) {
      throw FormatError("field 'insertions': slot " + std::to_string(i) +
                        " has fewer insertions than entries");
    }
    cache.insertions_[i] = insertions[i];
  }
  return cache;
}

}  // namespace semcom
