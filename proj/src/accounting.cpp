#include "semcom/accounting.hpp"

#include <charconv>
#include <cmath>
#include <ostream>

#include <nlohmann/json.hpp>

#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

void SideChannelModel::validate() const {
  if (!(code_rate > 0.0 && code_rate <= 1.0)) {
    throw InvalidArgument("side_channel.code_rate must be in (0, 1]");
  }
  if (bits_per_symbol == 0) {
    throw InvalidArgument("side_channel.bits_per_symbol must be positive");
  }
  if (!(success_prob > 0.0 && success_prob <= 1.0)) {
    throw InvalidArgument("side_channel.success_prob must be in (0, 1]");
  }
}

std::uint32_t ceil_log2(std::uint64_t n) {
  if (n == 0) throw InvalidArgument("ceil_log2(0)");
  std::uint32_t bits = 0;
  while ((std::uint64_t{1} << bits) < n) ++bits;
  return bits;
}

std::uint32_t index_bits(std::size_t n_slots, std::size_t cache_capacity) {
  return ceil_log2(n_slots) + ceil_log2(cache_capacity);
}

double per_index_symbols(std::size_t n_slots, std::size_t cache_capacity,
                         const SideChannelModel& sc) {
  sc.validate();
  return static_cast<double>(index_bits(n_slots, cache_capacity)) /
         (sc.code_rate * sc.bits_per_symbol * sc.success_prob);
}

double index_cost_symbols(std::size_t n_hits, std::size_t n_slots,
                          std::size_t cache_capacity,
                          const SideChannelModel& sc) {
  return static_cast<double>(n_hits) *
         per_index_symbols(n_slots, cache_capacity, sc);
}

double sampled_index_cost_symbols(std::size_t n_hits, std::size_t n_slots,
                                  std::size_t cache_capacity,
                                  const SideChannelModel& sc, CounterRng& rng) {
  sc.validate();
  if (n_hits == 0) return 0.0;
  double attempts = 1.0;
  if (sc.success_prob < 1.0) {
    attempts = std::ceil(std::log(rng.uniform_open()) /
                         std::log1p(-sc.success_prob));
    attempts = std::max(attempts, 1.0);
  }
  const double per_attempt =
      static_cast<double>(n_hits * index_bits(n_slots, cache_capacity)) /
      (sc.code_rate * sc.bits_per_symbol);
  return attempts * per_attempt;
}

double bcr(double k_total, const ImageShape& image) {
  if (image.size() == 0) throw InvalidArgument("bcr: empty image");
  return k_total / static_cast<double>(image.size());
}

double mse(const Image& x, const Image& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw InvalidArgument("image dimensions differ");
  }
  const auto a = x.pixels();
  const auto b = x_hat.pixels();
  double sum = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    const double d = 255.0 * (a[k] - b[k]);
    sum += d * d;
  }
  return a.empty() ? 0.0 : sum / static_cast<double>(a.size());
}

double psnr(const Image& x, const Image& x_hat) {
  const double m = mse(x, x_hat);
  if (m == 0.0) return kPsnrCapDb;
  return std::min(kPsnrCapDb, 10.0 * std::log10(255.0 * 255.0 / m));
}

double perceptual_distance(const FeatureExtractor& fe, const Image& x,
                           const Image& x_hat) {
  if (x.shape() != x_hat.shape()) {
    throw InvalidArgument("image dimensions differ");
  }
  const auto fa = extract_features(fe, x);
  const auto fb = extract_features(fe, x_hat);
  return feature_distance(fa, fb, fe.weights);
}

const char* const kRecordCsvHeader =
    "image_index,n_s,n_hits,payload_symbols,index_symbols,k_total,bcr,"
    "psnr_db,perceptual_distance,hits";

std::string format_double(double value) {
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

void write_records_csv(std::ostream& out,
                       const std::vector<TransmissionRecord>& records) {
  out << kRecordCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.image_index << ',' << r.n_s << ',' << r.hits.size() << ','
        << r.payload_symbols << ',' << format_double(r.index_symbols) << ','
        << format_double(r.k_total) << ',' << format_double(r.bcr) << ','
        << format_double(r.psnr_db) << ','
        << format_double(r.perceptual_distance) << ',';
    for (std::size_t h = 0; h < r.hits.size(); ++h) {
      if (h > 0) out << ';';
      out << r.hits[h].slot << ':' << r.hits[h].index << ':'
          << format_double(r.hits[h].similarity);
    }
    out << '\n';
  }
}

nlohmann::json to_json(const TransmissionRecord& r) {
  nlohmann::json hits = nlohmann::json::array();
  for (const auto& h : r.hits) {
    hits.push_back({{"slot", h.slot}, {"index", h.index},
                    {"similarity", h.similarity}});
  }
  return {{"image_index", r.image_index},
          {"n_s", r.n_s},
          {"n_hits", r.hits.size()},
          {"payload_symbols", r.payload_symbols},
          {"index_symbols", r.index_symbols},
          {"k_total", r.k_total},
          {"bcr", r.bcr},
          {"psnr_db", r.psnr_db},
          {"perceptual_distance", r.perceptual_distance},
          {"hits", hits}};
}

void write_records_jsonl(std::ostream& out,
                         const std::vector<TransmissionRecord>& records) {
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

}  // namespace semcom
