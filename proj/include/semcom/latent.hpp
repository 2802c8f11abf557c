#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace semcom {

struct LatentShape {
  std::size_t n_slots = 0;   // N_S
  std::size_t slot_len = 0;  // N_L

  std::size_t size() const { return n_slots * slot_len; }
  bool operator==(const LatentShape&) const = default;
};

// N_S x N_L matrix of semantic vectors, row-major; row i is slot i.
class SemanticLatent {
 public:
  SemanticLatent() = default;
  explicit SemanticLatent(LatentShape shape);
  // Throws InvalidArgument on size mismatch or non-finite entries.
  SemanticLatent(LatentShape shape, std::vector<double> values);

  const LatentShape& shape() const { return shape_; }
  std::size_t n_slots() const { return shape_.n_slots; }
  std::size_t slot_len() const { return shape_.slot_len; }

  std::span<const double> row(std::size_t slot) const;
  std::span<double> row(std::size_t slot);
  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool all_finite() const;
  bool operator==(const SemanticLatent&) const = default;

 private:
  LatentShape shape_;
  std::vector<double> data_;
};

using ComplexBlock = std::vector<std::complex<double>>;

struct ImageShape {
  std::size_t channels = 3;
  std::size_t height = 0;
  std::size_t width = 0;

  std::size_t size() const { return channels * height * width; }
  bool operator==(const ImageShape&) const = default;
};

// channels x height x width tensor, channel-major. Pixel values of exported
// images lie in [0, 1]; raw generator outputs may not (see clamped()).
class Image {
 public:
  Image() = default;
  explicit Image(ImageShape shape, double fill = 0.0);
  Image(ImageShape shape, std::vector<double> pixels);

  const ImageShape& shape() const { return shape_; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }
  std::size_t channels() const { return shape_.channels; }

  double& at(std::size_t c, std::size_t h, std::size_t w) {
    return pixels_[(c * shape_.height + h) * shape_.width + w];
  }
  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return pixels_[(c * shape_.height + h) * shape_.width + w];
  }

  std::span<const double> pixels() const { return pixels_; }
  std::span<double> pixels() { return pixels_; }

  bool in_unit_range() const;
  Image clamped() const;
  bool operator==(const Image&) const = default;

 private:
  ImageShape shape_;
  std::vector<double> pixels_;
};

struct Normalized {
  std::vector<double> values;
  double scale = 1.0;
};

// Scales v so the complex block formed by pairing consecutive reals has unit
// average symbol power: w = v * sqrt((L/2) / sum v_i^2). All-zero input comes
// back unchanged with scale 1. Throws InvalidArgument("non-finite latent").
Normalized power_normalize(std::span<const double> v);

// Interleaved packing: symbol m = v[2m] + i*v[2m+1].
// Throws InvalidArgument("odd symbol count") on odd length.
ComplexBlock pack_real_to_complex(std::span<const double> v);
std::vector<double> unpack_complex_to_real(const ComplexBlock& block);

double average_symbol_power(const ComplexBlock& block);

}  // namespace semcom
