#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "semcom/latent.hpp"

namespace semcom {

// Fixed filters applied after block-average downsampling.
enum class FeatureFilter { average, diff_horizontal, diff_vertical };

struct FeatureMap {
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> data;  // channel-major

  double at(std::size_t c, std::size_t h, std::size_t w) const {
    return data[(c * height + h) * width + w];
  }
  bool operator==(const FeatureMap&) const = default;
};

// Deterministic multi-scale feature extractor standing in for a pretrained
// perceptual network. Layer l is (scales[l / filters.size()],
// filters[l % filters.size()]); weights holds one omega per layer.
struct FeatureExtractor {
  std::vector<std::size_t> scales{1, 2, 4};
  std::vector<FeatureFilter> filters{FeatureFilter::average,
                                     FeatureFilter::diff_horizontal,
                                     FeatureFilter::diff_vertical};
  std::vector<double> weights = std::vector<double>(9, 1.0);

  std::size_t layer_count() const { return scales.size() * filters.size(); }
  // Throws InvalidArgument on a zero scale, weight count mismatch, negative
  // weights or all-zero weights.
  void validate() const;
};

// One map per layer, in layer order. A layer whose map would be empty for
// this image size (e.g. a difference filter on a single column) yields a
// 0-area map and contributes nothing to distances.
std::vector<FeatureMap> extract_features(const FeatureExtractor& fe,
                                         const Image& img);

// sum_l 1/(H_l W_l) sum_{h,w} || omega_l * (y_l[h,w] - yhat_l[h,w]) ||^2,
// with y_l[h,w] the channel vector at (h, w).
double feature_distance(std::span<const FeatureMap> a,
                        std::span<const FeatureMap> b,
                        std::span<const double> weights);

// Gradient of feature_distance(extract(a), extract(b)) with respect to a's
// pixels. Every filter is linear, so this is exact.
std::vector<double> feature_distance_gradient(const FeatureExtractor& fe,
                                              const Image& a, const Image& b);

}  // namespace semcom
