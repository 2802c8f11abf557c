#include "semcom/features.hpp"

#include <algorithm>
#include <string>

#include "semcom/error.hpp"

namespace semcom {

namespace {

FeatureMap downsample(const Image& img, std::size_t s) {
  FeatureMap out{img.channels(), img.height() / s, img.width() / s, {}};
  out.data.assign(out.channels * out.height * out.width, 0.0);
  const double inv = 1.0 / static_cast<double>(s * s);
  for (std::size_t c = 0; c < out.channels; ++c) {
    for (std::size_t h = 0; h < out.height; ++h) {
      for (std::size_t w = 0; w < out.width; ++w) {
        double sum = 0.0;
        for (std::size_t dh = 0; dh < s; ++dh) {
          for (std::size_t dw = 0; dw < s; ++dw) {
            sum += img.at(c, h * s + dh, w * s + dw);
          }
        }
        out.data[(c * out.height + h) * out.width + w] = sum * inv;
      }
    }
  }
  return out;
}

// Adjoint of downsample: spreads each pooled gradient over its block.
void downsample_adjoint(const FeatureMap& g, std::size_t s, Image& acc) {
  const double inv = 1.0 / static_cast<double>(s * s);
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t h = 0; h < g.height; ++h) {
      for (std::size_t w = 0; w < g.width; ++w) {
        const double v = g.at(c, h, w) * inv;
        for (std::size_t dh = 0; dh < s; ++dh) {
          for (std::size_t dw = 0; dw < s; ++dw) {
            acc.at(c, h * s + dh, w * s + dw) += v;
          }
        }
      }
    }
  }
}

FeatureMap apply_filter(const FeatureMap& in, FeatureFilter f) {
  if (f == FeatureFilter::average) return in;
  const bool horiz = f == FeatureFilter::diff_horizontal;
  FeatureMap out{in.channels, in.height, in.width, {}};
  if (horiz) {
    out.width = in.width > 0 ? in.width - 1 : 0;
  } else {
    out.height = in.height > 0 ? in.height - 1 : 0;
  }
  out.data.assign(out.channels * out.height * out.width, 0.0);
  for (std::size_t c = 0; c < out.channels; ++c) {
    for (std::size_t h = 0; h < out.height; ++h) {
      for (std::size_t w = 0; w < out.width; ++w) {
        const double next = horiz ? in.at(c, h, w + 1) : in.at(c, h + 1, w);
        out.data[(c * out.height + h) * out.width + w] = next - in.at(c, h, w);
      }
    }
  }
  return out;
}

FeatureMap filter_adjoint(const FeatureMap& g, FeatureFilter f,
                          std::size_t in_h, std::size_t in_w) {
  if (f == FeatureFilter::average) return g;
  const bool horiz = f == FeatureFilter::diff_horizontal;
  FeatureMap out{g.channels, in_h, in_w, {}};
  out.data.assign(out.channels * in_h * in_w, 0.0);
  auto at = [&](std::size_t c, std::size_t h, std::size_t w) -> double& {
    return out.data[(c * in_h + h) * in_w + w];
  };
  for (std::size_t c = 0; c < g.channels; ++c) {
    for (std::size_t h = 0; h < g.height; ++h) {
      for (std::size_t w = 0; w < g.width; ++w) {
        const double v = g.at(c, h, w);
        if (horiz) {
          at(c, h, w + 1) += v;
        } else {
          at(c, h + 1, w) += v;
        }
        at(c, h, w) -= v;
      }
    }
  }
  return out;
}

}  // namespace

void FeatureExtractor::validate() const {
  if (scales.empty() || filters.empty()) {
    throw InvalidArgument("feature extractor needs at least one layer");
  }
  for (std::size_t s : scales) {
    if (s == 0) throw InvalidArgument("feature scale must be positive");
  }
  if (weights.size() != layer_count()) {
    throw InvalidArgument("feature extractor has " +
                          std::to_string(weights.size()) + " weights for " +
                          std::to_string(layer_count()) + " layers");
  }
  bool any_positive = false;
  for (double w : weights) {
    if (!(w >= 0.0)) throw InvalidArgument("feature weights must be >= 0");
    any_positive = any_positive || w > 0.0;
  }
  if (!any_positive) {
    throw InvalidArgument("at least one feature weight must be positive");
  }
}

std::vector<FeatureMap> extract_features(const FeatureExtractor& fe,
                                         const Image& img) {
  fe.validate();
  std::vector<FeatureMap> maps;
  maps.reserve(fe.layer_count());
  for (std::size_t s : fe.scales) {
    const FeatureMap pooled = downsample(img, s);
    for (FeatureFilter f : fe.filters) maps.push_back(apply_filter(pooled, f));
  }
  return maps;
}

double feature_distance(std::span<const FeatureMap> a,
                        std::span<const FeatureMap> b,
                        std::span<const double> weights) {
  if (a.size() != b.size() || a.size() != weights.size()) {
    throw InvalidArgument("feature_distance: layer count mismatch");
  }
  double total = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) {
    if (a[l].data.size() != b[l].data.size() || a[l].height != b[l].height ||
        a[l].width != b[l].width) {
      throw InvalidArgument("feature_distance: map shape mismatch at layer " +
                            std::to_string(l));
    }
    const std::size_t area = a[l].height * a[l].width;
    if (area == 0) continue;
    double sum = 0.0;
    for (std::size_t k = 0; k < a[l].data.size(); ++k) {
      const double d = weights[l] * (a[l].data[k] - b[l].data[k]);
      sum += d * d;
    }
    total += sum / static_cast<double>(area);
  }
  return total;
}

std::vector<double> feature_distance_gradient(const FeatureExtractor& fe,
                                              const Image& a, const Image& b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument("feature_distance_gradient: image shape mismatch");
  }
  const auto fa = extract_features(fe, a);
  const auto fb = extract_features(fe, b);
  Image acc(a.shape(), 0.0);
  std::size_t l = 0;
  for (std::size_t s : fe.scales) {
    const std::size_t ph = a.height() / s;
    const std::size_t pw = a.width() / s;
    FeatureMap pooled_grad{a.channels(), ph, pw,
                           std::vector<double>(a.channels() * ph * pw, 0.0)};
    for (FeatureFilter f : fe.filters) {
      const FeatureMap& ya = fa[l];
      const std::size_t area = ya.height * ya.width;
      if (area > 0) {
        const double coef =
            2.0 * fe.weights[l] * fe.weights[l] / static_cast<double>(area);
        FeatureMap g{ya.channels, ya.height, ya.width,
                     std::vector<double>(ya.data.size())};
        for (std::size_t k = 0; k < g.data.size(); ++k) {
          g.data[k] = coef * (ya.data[k] - fb[l].data[k]);
        }
        const FeatureMap back = filter_adjoint(g, f, ph, pw);
        for (std::size_t k = 0; k < back.data.size(); ++k) {
          pooled_grad.data[k] += back.data[k];
        }
      }
      ++l;
    }
    downsample_adjoint(pooled_grad, s, acc);
  }
  return std::vector<double>(acc.pixels().begin(), acc.pixels().end());
}

}  // namespace semcom
