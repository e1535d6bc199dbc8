#ifndef ZIVOS_UNCERTAINTY_HPP
#define ZIVOS_UNCERTAINTY_HPP

// Tracking-state proxy: per-pixel normalized Shannon entropy, restricted to
// a disk-dilated object mask and averaged over that region.

#include <algorithm>
#include <cmath>

#include "zivos/core.hpp"
#include "zivos/detail/edt.hpp"

namespace zivos {

struct EntropyMapTag {};
/// Normalized entropy in [0,1] per pixel.
using EntropyMap = Raster<double, EntropyMapTag>;

inline constexpr int kDefaultDilationRadius = 2;

/// Normalized entropy of one categorical distribution: -sum p ln p / ln C,
/// with 0 ln 0 = 0. A single class carries no uncertainty.
inline double normalized_entropy(std::span<const float> p) {
  if (p.size() <= 1) return 0.0;
  double h = 0.0;
  for (float v : p) {
    if (v > 0.0f) {
      const double d = v;
      h -= d * std::log(d);
    }
  }
  return std::clamp(h / std::log(static_cast<double>(p.size())), 0.0, 1.0);
}

inline EntropyMap entropy_map(const ProbabilityMap& prob) {
  EntropyMap out(prob.height(), prob.width());
  for (int r = 0; r < prob.height(); ++r) {
    for (int c = 0; c < prob.width(); ++c) out(r, c) = normalized_entropy(prob.pixel(r, c));
  }
  return out;
}

/// Dilation by the disk {(i,j) : i^2 + j^2 <= radius^2}. Pixels outside the
/// frame count as background. A pixel lies in the dilation exactly when its
/// squared distance to the nearest object pixel is at most radius^2, which
/// the exact distance transform gives directly.
inline BinaryMask dilate_mask(const BinaryMask& mask, int radius) {
  if (radius < 0) throw Error(ErrorKind::invalid_argument, "dilation radius must be >= 0");
  if (radius == 0 || empty(mask)) return mask;
  const auto sq = detail::squared_distance_to_seeds(mask.height(), mask.width(), mask.values());
  const double limit = static_cast<double>(radius) * radius;
  BinaryMask out(mask.height(), mask.width());
  for (std::size_t i = 0; i < sq.size(); ++i) out.values()[i] = sq[i] <= limit ? 1 : 0;
  return out;
}

struct RegionEntropy {
  double value = 0.0;
  std::size_t region_size = 0;
  /// The region was empty; value and region_size are then 0.
  bool absent = true;
};

/// Mean entropy over the region (pixel-entropy sum divided by region size).
inline RegionEntropy region_entropy(const EntropyMap& entropy, const BinaryMask& region) {
  require_same_shape(entropy, region, "region_entropy");
  double sum = 0.0;
  std::size_t n = 0;
  const auto e = entropy.values();
  const auto m = region.values();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i]) {
      sum += e[i];
      ++n;
    }
  }
  if (n == 0) return {};
  return {sum / static_cast<double>(n), n, false};
}

}  // namespace zivos

#endif  // ZIVOS_UNCERTAINTY_HPP
