#include "semcom/dataset.hpp"

#include <cmath>

#include "bundle.hpp"
#include "semcom/error.hpp"
#include "semcom/rng.hpp"

namespace semcom {

void SyntheticSourceSpec::validate() const {
  if (prototypes_per_slot < 1) {
    throw InvalidArgument("source.prototypes_per_slot must be >= 1");
  }
  if (!(reuse_prob >= 0.0 && reuse_prob <= 1.0)) {
    throw InvalidArgument("source.reuse_prob must be in [0, 1]");
  }
  if (!(perturbation_std >= 0.0) || !std::isfinite(perturbation_std)) {
    throw InvalidArgument("source.perturbation_std must be >= 0");
  }
}

Image render_latent(const GeneratorModel& model, const SemanticLatent& z) {
  const SemanticLatent normalized(z.shape(), power_normalize(z.values()).values);
  return model.forward(normalized).clamped();
}

SourceSequence generate_source_sequence(const SyntheticSourceSpec& spec,
                                        LatentShape shape, std::size_t count,
                                        std::uint64_t seed,
                                        const GeneratorModel* model) {
  spec.validate();
  if (shape.size() == 0) throw InvalidArgument("source: empty latent shape");
  if (model && model->latent_shape() != shape) {
    throw InvalidArgument("source: generator latent shape mismatch");
  }

  // bank[i][p] is prototype p of slot i.
  std::vector<std::vector<std::vector<double>>> bank(shape.n_slots);
  CounterRng bank_rng(derive_seed(seed, "source.prototypes"));
  for (auto& slot : bank) {
    slot.resize(spec.prototypes_per_slot);
    for (auto& proto : slot) {
      proto.resize(shape.slot_len);
      for (double& v : proto) v = bank_rng.gaussian();
    }
  }

  SourceSequence seq;
  seq.shape = shape;
  seq.latents.reserve(count);
  seq.reused.reserve(count);
  for (std::size_t n = 0; n < count; ++n) {
    CounterRng rng(derive_seed(seed, "source.item", n));
    SemanticLatent z(shape);
    std::vector<bool> reused(shape.n_slots, false);
    for (std::size_t i = 0; i < shape.n_slots; ++i) {
      auto row = z.row(i);
      if (rng.bernoulli(spec.reuse_prob)) {
        reused[i] = true;
        const auto& proto = bank[i][rng.below(spec.prototypes_per_slot)];
        std::copy(proto.begin(), proto.end(), row.begin());
      } else {
        for (double& v : row) v = rng.gaussian();
      }
      for (double& v : row) v += spec.perturbation_std * rng.gaussian();
    }
    if (model) seq.images.push_back(render_latent(*model, z));
    seq.latents.push_back(std::move(z));
    seq.reused.push_back(std::move(reused));
  }
  return seq;
}

void save_dataset(const SourceSequence& seq,
                  const std::filesystem::path& manifest_path,
                  const std::string& dtype) {
  detail::dtype_width(dtype);  // rejects unknown tags
  if (!seq.images.empty() && seq.images.size() != seq.latents.size()) {
    throw InvalidArgument("dataset: image count does not match latent count");
  }
  nlohmann::json manifest;
  manifest["format"] = "semcom-dataset";
  manifest["version"] = 1;
  manifest["dtype"] = dtype;
  manifest["n_items"] = seq.latents.size();
  manifest["n_slots"] = seq.shape.n_slots;
  manifest["slot_len"] = seq.shape.slot_len;
  manifest["has_images"] = !seq.images.empty();
  if (!seq.images.empty()) {
    manifest["channels"] = seq.images.front().channels();
    manifest["image_height"] = seq.images.front().height();
    manifest["image_width"] = seq.images.front().width();
  }

  auto put = [&](std::vector<unsigned char>& out, double v) {
    if (dtype == "f32le") {
      detail::append_f32le(out, v);
    } else {
      detail::append_f64le(out, v);
    }
  };
  std::vector<unsigned char> bytes;
  for (const auto& z : seq.latents) {
    if (z.shape() != seq.shape) {
      throw InvalidArgument("dataset: latent shape mismatch");
    }
    for (double v : z.values()) put(bytes, v);
  }
  for (const auto& img : seq.images) {
    if (img.shape() != seq.images.front().shape()) {
      throw InvalidArgument("dataset: image shape mismatch");
    }
    for (double v : img.pixels()) put(bytes, v);
  }
  detail::write_bundle(manifest_path, std::move(manifest), bytes);
}

SourceSequence load_dataset(const std::filesystem::path& manifest_path) {
  auto bundle = detail::read_bundle(manifest_path, "semcom-dataset");
  const auto& m = bundle.manifest;
  const std::string dtype = detail::require_string(m, "dtype");
  const std::size_t width = detail::dtype_width(dtype);
  const auto n_items = detail::require_uint(m, "n_items");
  const LatentShape shape{detail::require_uint(m, "n_slots"),
                          detail::require_uint(m, "slot_len")};
  if (shape.n_slots == 0) throw FormatError("field 'n_slots': must be positive");
  if (shape.slot_len == 0 || shape.slot_len % 2 != 0) {
    throw FormatError("field 'slot_len': must be positive and even, found " +
                      std::to_string(shape.slot_len));
  }
  if (!m.contains("has_images") || !m["has_images"].is_boolean()) {
    throw FormatError("field 'has_images': missing or not a boolean");
  }
  ImageShape ishape{0, 0, 0};
  if (m["has_images"].get<bool>()) {
    ishape = {detail::require_uint(m, "channels"),
              detail::require_uint(m, "image_height"),
              detail::require_uint(m, "image_width")};
    if (ishape.size() == 0) {
      throw FormatError("field 'image_height': image dimensions must be positive");
    }
  }
  const std::size_t expected =
      n_items * (shape.size() + ishape.size()) * width;
  if (expected != bundle.bytes.size()) {
    throw FormatError("field 'n_items': implies " + std::to_string(expected) +
                      " bytes, binary has " +
                      std::to_string(bundle.bytes.size()));
  }

  auto get = [&](std::size_t offset) {
    return width == 4 ? detail::read_f32le(bundle.bytes, offset)
                      : detail::read_f64le(bundle.bytes, offset);
  };
  SourceSequence seq;
  seq.shape = shape;
  std::size_t offset = 0;
  for (std::size_t n = 0; n < n_items; ++n) {
    std::vector<double> values(shape.size());
    for (double& v : values) {
      v = get(offset);
      offset += width;
    }
    try {
      seq.latents.emplace_back(shape, std::move(values));
    } catch (const InvalidArgument&) {
      throw FormatError("latent " + std::to_string(n) +
                        " contains non-finite values");
    }
  }
  if (ishape.size() > 0) {
    for (std::size_t n = 0; n < n_items; ++n) {
      std::vector<double> pixels(ishape.size());
      for (double& v : pixels) {
        v = get(offset);
        offset += width;
      }
      Image img(ishape, std::move(pixels));
      if (!img.in_unit_range()) {
        throw FormatError("image " + std::to_string(n) +
                          " has pixels outside [0, 1]");
      }
      seq.images.push_back(std::move(img));
    }
  }
  return seq;
}

}  // namespace semcom
