#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "semcom/latent.hpp"

namespace semcom {

enum class GeneratorKind { linear, mlp };

std::string_view to_string(GeneratorKind kind);
GeneratorKind generator_kind_from_string(std::string_view name);

struct DenseLayer {
  Eigen::MatrixXd weight;  // out x in
  Eigen::VectorXd bias;    // out
};

// Differentiable map from a flattened N_S*N_L latent to a 3*H*W image.
//
// linear: one affine layer, no output nonlinearity. Pixels are not clamped
//         here; callers clamp at export time (Image::clamped) so the
//         least-squares structure of the map stays exact.
// mlp:    affine layers with tanh on hidden layers and a logistic squash on
//         the output layer.
//
// Immutable after construction; forward/backward are reentrant.
class GeneratorModel {
 public:
  GeneratorModel(GeneratorKind kind, LatentShape latent, ImageShape image,
                 std::vector<DenseLayer> layers);

  // Glorot-uniform weights from a seeded stream, rounded to float32 so the
  // weight file round-trips bit-exactly. Output bias is 0.5 for the linear
  // kind (centres pixels) and 0 elsewhere.
  static GeneratorModel make_linear(LatentShape latent, ImageShape image,
                                    std::uint64_t seed);
  static GeneratorModel make_mlp(LatentShape latent, ImageShape image,
                                 std::vector<std::size_t> hidden,
                                 std::uint64_t seed);

  Image forward(const SemanticLatent& z) const;
  std::vector<double> forward(std::span<const double> z) const;

  // Vector-Jacobian product: d(upstream . G(z))/dz, latent-shaped (flat).
  std::vector<double> backward(const SemanticLatent& z,
                               const Image& upstream) const;
  std::vector<double> backward(std::span<const double> z,
                               std::span<const double> upstream) const;

  GeneratorKind kind() const { return kind_; }
  const LatentShape& latent_shape() const { return latent_; }
  const ImageShape& image_shape() const { return image_; }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  // [input, hidden..., output]
  std::vector<std::size_t> layer_widths() const;

  bool operator==(const GeneratorModel& other) const;

 private:
  GeneratorKind kind_;
  LatentShape latent_;
  ImageShape image_;
  std::vector<DenseLayer> layers_;
};

// Weight file: JSON manifest (kind, dims, layer widths, dtype, checksum) and
// a companion binary of little-endian float32 values; for each layer the
// row-major weight matrix followed by the bias.
void save_generator(const GeneratorModel& model,
                    const std::filesystem::path& manifest_path);
GeneratorModel load_generator(const std::filesystem::path& manifest_path);

}  // namespace semcom
