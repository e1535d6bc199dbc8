#ifndef ZIVOS_INTERACTIONS_HPP
#define ZIVOS_INTERACTIONS_HPP

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "zivos/core.hpp"
#include "zivos/detail/components.hpp"
#include "zivos/detail/edt.hpp"
#include "zivos/uncertainty.hpp"

namespace zivos {

struct DistanceFieldTag {};
/// Euclidean distance to the nearest boundary pixel of a mask.
using DistanceField = Raster<double, DistanceFieldTag>;

/// Mask pixels with a 4-neighbour that is background or outside the frame,
/// in row-major order.
inline std::vector<Pixel> boundary_set(const BinaryMask& mask) {
  std::vector<Pixel> out;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (!mask(r, c)) continue;
      for (const Pixel d : detail::kFourNeighbours) {
        const Pixel n{r + d.row, c + d.col};
        if (!mask.contains(n) || !mask[n]) {
          out.push_back({r, c});
          break;
        }
      }
    }
  }
  return out;
}

inline BinaryMask boundary_mask(const BinaryMask& mask) {
  BinaryMask out(mask.height(), mask.width());
  for (const Pixel p : boundary_set(mask)) out[p] = 1;
  return out;
}

inline DistanceField distance_field(const BinaryMask& mask) {
  if (empty(mask)) throw Error(ErrorKind::empty_mask, "distance field of an empty mask");
  const BinaryMask boundary = boundary_mask(mask);
  auto sq = detail::squared_distance_to_seeds(mask.height(), mask.width(), boundary.values());
  for (double& v : sq) v = std::sqrt(v);
  return DistanceField(mask.height(), mask.width(), std::move(sq));
}

/// Positive click at argmax(dilated * distance * (1 - entropy)); ties go to
/// the first pixel in row-major order.
inline Click pseudo_click(const BinaryMask& dilated, const DistanceField& field,
                          const EntropyMap& entropy, FrameIndex frame, ObjectId object) {
  require_same_shape(dilated, field, "pseudo_click");
  require_same_shape(dilated, entropy, "pseudo_click");
  if (empty(dilated)) throw Error(ErrorKind::no_valid_site, "dilated mask is empty");
  double best = 0.0;
  std::optional<Pixel> site;
  for (int r = 0; r < dilated.height(); ++r) {
    for (int c = 0; c < dilated.width(); ++c) {
      if (!dilated(r, c)) continue;
      const double score = field(r, c) * (1.0 - entropy(r, c));
      if (score > best) {
        best = score;
        site = Pixel{r, c};
      }
    }
  }
  if (!site) throw Error(ErrorKind::no_valid_site, "pseudo-click score vanishes everywhere");
  return {frame, object, site->row, site->col, Polarity::positive, ClickOrigin::pseudo};
}

enum class ErrorRegionKind { false_negative, false_positive };

struct MisclassifiedRegion {
  std::vector<Pixel> pixels;
  ErrorRegionKind kind = ErrorRegionKind::false_negative;

  std::size_t size() const noexcept { return pixels.size(); }
};

// Components are taken separately over the false-negative and the
// false-positive pixels so every region has a single kind.
inline MisclassifiedRegion largest_misclassified_component(const BinaryMask& pred,
                                                           const BinaryMask& gt) {
  require_same_shape(pred, gt, "largest_misclassified_component");
  BinaryMask fn(pred.height(), pred.width());
  BinaryMask fp(pred.height(), pred.width());
  bool any = false;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.values()[i] != 0;
    const bool g = gt.values()[i] != 0;
    fn.values()[i] = (g && !p) ? 1 : 0;
    fp.values()[i] = (p && !g) ? 1 : 0;
    any = any || (p != g);
  }
  if (!any) throw Error(ErrorKind::no_misclassification, "prediction matches ground truth");

  MisclassifiedRegion best;
  bool have = false;
  // false negatives first: on equal size they win, and within a kind the
  // component order is already row-major by anchor.
  for (const auto kind : {ErrorRegionKind::false_negative, ErrorRegionKind::false_positive}) {
    const auto comps = detail::connected_components(kind == ErrorRegionKind::false_negative ? fn : fp);
    for (const auto& comp : comps) {
      const bool better =
          !have || comp.size() > best.size() ||
          (comp.size() == best.size() && kind == best.kind && comp.front() < best.pixels.front());
      if (better) {
        best = {comp, kind};
        have = true;
      }
    }
  }
  return best;
}

/// Region pixel closest to the region's exact centroid; ties go to the lowest
/// row-major pixel.
inline Pixel snapped_centroid(const std::vector<Pixel>& pixels) {
  if (pixels.empty()) throw Error(ErrorKind::empty_mask, "centroid of an empty region");
  double sr = 0.0;
  double sc = 0.0;
  for (const Pixel p : pixels) {
    sr += p.row;
    sc += p.col;
  }
  const double cr = sr / static_cast<double>(pixels.size());
  const double cc = sc / static_cast<double>(pixels.size());
  Pixel best = pixels.front();
  double best_d = std::numeric_limits<double>::infinity();
  for (const Pixel p : pixels) {
    const double d = (p.row - cr) * (p.row - cr) + (p.col - cc) * (p.col - cc);
    if (d < best_d || (d == best_d && p < best)) {
      best_d = d;
      best = p;
    }
  }
  return best;
}

inline std::vector<Pixel> mask_pixels(const BinaryMask& mask) {
  std::vector<Pixel> out;
  for (int r = 0; r < mask.height(); ++r) {
    for (int c = 0; c < mask.width(); ++c) {
      if (mask(r, c)) out.push_back({r, c});
    }
  }
  return out;
}

/// Click at the snapped centroid of the largest misclassified component,
/// positive on a false negative and negative on a false positive.
inline Click simulated_user_click(const BinaryMask& pred, const BinaryMask& gt, FrameIndex frame,
                                  ObjectId object) {
  const auto region = largest_misclassified_component(pred, gt);
  const Pixel p = snapped_centroid(region.pixels);
  return {frame,
          object,
          p.row,
          p.col,
          region.kind == ErrorRegionKind::false_negative ? Polarity::positive : Polarity::negative,
          ClickOrigin::user};
}

/// Positive click at the snapped centroid of the ground-truth mask.
inline Click gt_centroid_click(const BinaryMask& gt, FrameIndex frame, ObjectId object,
                               ClickOrigin origin = ClickOrigin::user) {
  const Pixel p = snapped_centroid(mask_pixels(gt));
  return {frame, object, p.row, p.col, Polarity::positive, origin};
}

}  // namespace zivos

#endif  // ZIVOS_INTERACTIONS_HPP
