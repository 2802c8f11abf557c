#include "semcom/latent.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "semcom/error.hpp"

namespace semcom {

SemanticLatent::SemanticLatent(LatentShape shape)
    : shape_(shape), data_(shape.size(), 0.0) {}

SemanticLatent::SemanticLatent(LatentShape shape, std::vector<double> values)
    : shape_(shape), data_(std::move(values)) {
  if (data_.size() != shape_.size()) {
    throw InvalidArgument("latent has " + std::to_string(data_.size()) +
                          " values, shape needs " +
                          std::to_string(shape_.size()));
  }
  if (!all_finite()) throw InvalidArgument("non-finite latent");
}

std::span<const double> SemanticLatent::row(std::size_t slot) const {
  return std::span<const double>(data_).subspan(slot * shape_.slot_len,
                                                shape_.slot_len);
}

std::span<double> SemanticLatent::row(std::size_t slot) {
  return std::span<double>(data_).subspan(slot * shape_.slot_len,
                                          shape_.slot_len);
}

bool SemanticLatent::all_finite() const {
  return std::all_of(data_.begin(), data_.end(),
                     [](double v) { return std::isfinite(v); });
}

Image::Image(ImageShape shape, double fill)
    : shape_(shape), pixels_(shape.size(), fill) {}

Image::Image(ImageShape shape, std::vector<double> pixels)
    : shape_(shape), pixels_(std::move(pixels)) {
  if (pixels_.size() != shape_.size()) {
    throw InvalidArgument("image has " + std::to_string(pixels_.size()) +
                          " pixels, shape needs " +
                          std::to_string(shape_.size()));
  }
}

bool Image::in_unit_range() const {
  return std::all_of(pixels_.begin(), pixels_.end(),
                     [](double p) { return p >= 0.0 && p <= 1.0; });
}

Image Image::clamped() const {
  Image out = *this;
  for (double& p : out.pixels_) p = std::clamp(p, 0.0, 1.0);
  return out;
}

Normalized power_normalize(std::span<const double> v) {
  if (v.empty()) throw InvalidArgument("empty latent");
  double energy = 0.0;
  for (double x : v) {
    if (!std::isfinite(x)) throw InvalidArgument("non-finite latent");
    energy += x * x;
  }
  Normalized out{std::vector<double>(v.begin(), v.end()), 1.0};
  if (energy == 0.0) return out;
  out.scale = std::sqrt(0.5 * static_cast<double>(v.size()) / energy);
  for (double& x : out.values) x *= out.scale;
  return out;
}

ComplexBlock pack_real_to_complex(std::span<const double> v) {
  if (v.size() % 2 != 0) throw InvalidArgument("odd symbol count");
  ComplexBlock out(v.size() / 2);
  for (std::size_t m = 0; m < out.size(); ++m) {
    out[m] = {v[2 * m], v[2 * m + 1]};
  }
  return out;
}

std::vector<double> unpack_complex_to_real(const ComplexBlock& block) {
  std::vector<double> out(2 * block.size());
  for (std::size_t m = 0; m < block.size(); ++m) {
    out[2 * m] = block[m].real();
    out[2 * m + 1] = block[m].imag();
  }
  return out;
}

double average_symbol_power(const ComplexBlock& block) {
  if (block.empty()) return 0.0;
  double total = 0.0;
  for (const auto& s : block) total += std::norm(s);
  return total / static_cast<double>(block.size());
}

}  // namespace semcom
