#include "semcom/generator.hpp"

#include <cmath>
#include <string>

#include "bundle.hpp"
#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

namespace {

double logistic(double a) { return 1.0 / (1.0 + std::exp(-a)); }

DenseLayer glorot_layer(std::size_t in, std::size_t out, double bias,
                        CounterRng& rng) {
  const double a = std::sqrt(6.0 / static_cast<double>(in + out));
  DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd::Constant(out, bias)};
  for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
    for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
      layer.weight(r, c) = static_cast<float>(rng.uniform(-a, a));
    }
  }
  return layer;
}

struct Activations {
  // outputs[0] is the input; outputs[l+1] is the output of layer l.
  std::vector<Eigen::VectorXd> outputs;
};

}  // namespace

std::string_view to_string(GeneratorKind kind) {
  return kind == GeneratorKind::linear ? "linear" : "mlp";
}

GeneratorKind generator_kind_from_string(std::string_view name) {
  if (name == "linear") return GeneratorKind::linear;
  if (name == "mlp") return GeneratorKind::mlp;
  throw InvalidArgument("unknown generator kind '" + std::string(name) + "'");
}

GeneratorModel::GeneratorModel(GeneratorKind kind, LatentShape latent,
                               ImageShape image, std::vector<DenseLayer> layers)
    : kind_(kind), latent_(latent), image_(image), layers_(std::move(layers)) {
  if (latent_.size() == 0 || image_.size() == 0) {
    throw InvalidArgument("generator dimensions must be positive");
  }
  if (layers_.empty()) throw InvalidArgument("generator has no layers");
  if (kind_ == GeneratorKind::linear && layers_.size() != 1) {
    throw InvalidArgument("linear generator must have exactly one layer");
  }
  std::size_t width = latent_.size();
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    if (static_cast<std::size_t>(layer.weight.cols()) != width ||
        layer.bias.size() != layer.weight.rows()) {
      throw InvalidArgument("generator layer " + std::to_string(l) +
                            " has inconsistent shape");
    }
    if (!layer.weight.allFinite() || !layer.bias.allFinite()) {
      throw InvalidArgument("generator layer " + std::to_string(l) +
                            " has non-finite parameters");
    }
    width = static_cast<std::size_t>(layer.weight.rows());
  }
  if (width != image_.size()) {
    throw InvalidArgument("generator output width " + std::to_string(width) +
                          " does not match image size " +
                          std::to_string(image_.size()));
  }
}

GeneratorModel GeneratorModel::make_linear(LatentShape latent, ImageShape image,
                                           std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<DenseLayer> layers;
  layers.push_back(glorot_layer(latent.size(), image.size(), 0.5, rng));
  return GeneratorModel(GeneratorKind::linear, latent, image, std::move(layers));
}

GeneratorModel GeneratorModel::make_mlp(LatentShape latent, ImageShape image,
                                        std::vector<std::size_t> hidden,
                                        std::uint64_t seed) {
  CounterRng rng(seed);
  std::vector<DenseLayer> layers;
  std::size_t in = latent.size();
  for (std::size_t width : hidden) {
    if (width == 0) throw InvalidArgument("hidden layer width must be positive");
    layers.push_back(glorot_layer(in, width, 0.0, rng));
    in = width;
  }
  layers.push_back(glorot_layer(in, image.size(), 0.0, rng));
  return GeneratorModel(GeneratorKind::mlp, latent, image, std::move(layers));
}

std::vector<std::size_t> GeneratorModel::layer_widths() const {
  std::vector<std::size_t> widths{latent_.size()};
  for (const auto& layer : layers_) {
    widths.push_back(static_cast<std::size_t>(layer.weight.rows()));
  }
  return widths;
}

namespace {

Activations run_forward(const GeneratorModel& model, std::span<const double> z) {
  Activations act;
  act.outputs.reserve(model.layers().size() + 1);
  act.outputs.emplace_back(
      Eigen::Map<const Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size())));
  const auto& layers = model.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    Eigen::VectorXd a = layers[l].weight * act.outputs.back() + layers[l].bias;
    if (model.kind() == GeneratorKind::mlp) {
      if (l + 1 < layers.size()) {
        a = a.array().tanh();
      } else {
        a = a.unaryExpr([](double v) { return logistic(v); });
      }
    }
    act.outputs.push_back(std::move(a));
  }
  return act;
}

}  // namespace

std::vector<double> GeneratorModel::forward(std::span<const double> z) const {
  if (z.size() != latent_.size()) {
    throw InvalidArgument("latent size " + std::to_string(z.size()) +
                          " does not match generator input " +
                          std::to_string(latent_.size()));
  }
  const Activations act = run_forward(*this, z);
  const auto& out = act.outputs.back();
  return std::vector<double>(out.data(), out.data() + out.size());
}

Image GeneratorModel::forward(const SemanticLatent& z) const {
  if (z.shape() != latent_) {
    throw InvalidArgument("latent shape does not match generator input");
  }
  return Image(image_, forward(z.values()));
}

std::vector<double> GeneratorModel::backward(
    std::span<const double> z, std::span<const double> upstream) const {
  if (z.size() != latent_.size()) {
    throw InvalidArgument("latent size does not match generator input");
  }
  if (upstream.size() != image_.size()) {
    throw InvalidArgument("upstream gradient size does not match image size");
  }
  const Activations act = run_forward(*this, z);
  Eigen::VectorXd grad = Eigen::Map<const Eigen::VectorXd>(
      upstream.data(), static_cast<Eigen::Index>(upstream.size()));
  for (std::size_t l = layers_.size(); l-- > 0;) {
    if (kind_ == GeneratorKind::mlp) {
      const Eigen::VectorXd& y = act.outputs[l + 1];
      if (l + 1 == layers_.size()) {
        grad = grad.array() * y.array() * (1.0 - y.array());
      } else {
        grad = grad.array() * (1.0 - y.array().square());
      }
    }
    grad = layers_[l].weight.transpose() * grad;
  }
  return std::vector<double>(grad.data(), grad.data() + grad.size());
}

std::vector<double> GeneratorModel::backward(const SemanticLatent& z,
                                             const Image& upstream) const {
  if (z.shape() != latent_ || upstream.shape() != image_) {
    throw InvalidArgument("backward: shape mismatch");
  }
  return backward(z.values(), upstream.pixels());
}

bool GeneratorModel::operator==(const GeneratorModel& other) const {
  if (kind_ != other.kind_ || !(latent_ == other.latent_) ||
      !(image_ == other.image_) || layers_.size() != other.layers_.size()) {
    return false;
  }
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    if (layers_[l].weight != other.layers_[l].weight ||
        layers_[l].bias != other.layers_[l].bias) {
      return false;
    }
  }
  return true;
}

void save_generator(const GeneratorModel& model,
                    const std::filesystem::path& manifest_path) {
  nlohmann::json manifest;
  manifest["format"] = "semcom-generator";
  manifest["version"] = 1;
  manifest["kind"] = std::string(to_string(model.kind()));
  manifest["n_slots"] = model.latent_shape().n_slots;
  manifest["slot_len"] = model.latent_shape().slot_len;
  manifest["channels"] = model.image_shape().channels;
  manifest["image_height"] = model.image_shape().height;
  manifest["image_width"] = model.image_shape().width;
  manifest["layer_widths"] = model.layer_widths();
  manifest["hidden_activation"] = "tanh";
  manifest["output_activation"] =
      model.kind() == GeneratorKind::mlp ? "logistic" : "identity";
  manifest["dtype"] = "f32le";

  std::vector<unsigned char> bytes;
  for (const auto& layer : model.layers()) {
    for (Eigen::Index r = 0; r < layer.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weight.cols(); ++c) {
        detail::append_f32le(bytes, layer.weight(r, c));
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) {
      detail::append_f32le(bytes, layer.bias(r));
    }
  }
  detail::write_bundle(manifest_path, std::move(manifest), bytes);
}

GeneratorModel load_generator(const std::filesystem::path& manifest_path) {
  auto bundle = detail::read_bundle(manifest_path, "semcom-generator");
  const auto& m = bundle.manifest;
  if (detail::require_string(m, "dtype") != "f32le") {
    throw FormatError("field 'dtype': generator weights must be f32le");
  }
  GeneratorKind kind;
  try {
    kind = generator_kind_from_string(detail::require_string(m, "kind"));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("field 'kind': ") + e.what());
  }
  const LatentShape latent{detail::require_uint(m, "n_slots"),
                           detail::require_uint(m, "slot_len")};
  const ImageShape image{detail::require_uint(m, "channels"),
                         detail::require_uint(m, "image_height"),
                         detail::require_uint(m, "image_width")};
  if (!m.contains("layer_widths") || !m["layer_widths"].is_array()) {
    throw FormatError("field 'layer_widths': missing or not an array");
  }
  const auto widths = m["layer_widths"].get<std::vector<std::size_t>>();
  if (widths.size() < 2) throw FormatError("field 'layer_widths': too short");

  std::size_t expected = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    expected += (widths[l] + 1) * widths[l + 1] * 4;
  }
  if (expected != bundle.bytes.size()) {
    throw FormatError("field 'layer_widths': implies " +
                      std::to_string(expected) + " bytes, binary has " +
                      std::to_string(bundle.bytes.size()));
  }

  std::vector<DenseLayer> layers;
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(widths[l]);
    const auto out = static_cast<Eigen::Index>(widths[l + 1]);
    DenseLayer layer{Eigen::MatrixXd(out, in), Eigen::VectorXd(out)};
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) {
        layer.weight(r, c) = detail::read_f32le(bundle.bytes, offset);
        offset += 4;
      }
    }
    for (Eigen::Index r = 0; r < out; ++r) {
      layer.bias(r) = detail::read_f32le(bundle.bytes, offset);
      offset += 4;
    }
    layers.push_back(std::move(layer));
  }
  try {
    return GeneratorModel(kind, latent, image, std::move(layers));
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("field 'layer_widths': ") + e.what());
  }
}

}  // namespace semcom
