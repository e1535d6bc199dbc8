#ifndef ZIVOS_METRICS_HPP
#define ZIVOS_METRICS_HPP

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "zivos/core.hpp"
#include "zivos/detail/edt.hpp"
#include "zivos/interactions.hpp"

namespace zivos {

/// |pred & gt| / |pred | gt|; two empty masks agree perfectly (1.0).
inline double iou(const BinaryMask& pred, const BinaryMask& gt) {
  require_same_shape(pred, gt, "iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const bool p = pred.values()[i] != 0;
    const bool g = gt.values()[i] != 0;
    inter += (p && g) ? 1 : 0;
    uni += (p || g) ? 1 : 0;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

/// ceil(0.8% of the image diagonal), the usual DAVIS boundary tolerance.
inline double default_boundary_tolerance(int height, int width) {
  return std::ceil(0.008 * std::hypot(static_cast<double>(height), static_cast<double>(width)));
}

/// Boundary F-measure: a boundary pixel matches when some boundary pixel of
/// the other mask lies within `tolerance` (Euclidean).
inline double boundary_f(const BinaryMask& pred, const BinaryMask& gt, double tolerance) {
  require_same_shape(pred, gt, "boundary_f");
  const BinaryMask pb = boundary_mask(pred);
  const BinaryMask gb = boundary_mask(gt);
  const auto np = count(pb);
  const auto ng = count(gb);
  if (np == 0 && ng == 0) return 1.0;
  if (np == 0 || ng == 0) return 0.0;

  const double limit = tolerance * tolerance;
  auto matched_fraction = [&](const BinaryMask& from, const BinaryMask& to, std::size_t n) {
    const auto sq = detail::squared_distance_to_seeds(to.height(), to.width(), to.values());
    std::size_t hit = 0;
    for (std::size_t i = 0; i < from.size(); ++i) {
      if (from.values()[i] && sq[i] <= limit) ++hit;
    }
    return static_cast<double>(hit) / static_cast<double>(n);
  };
  const double precision = matched_fraction(pb, gb, np);
  const double recall = matched_fraction(gb, pb, ng);
  if (precision + recall == 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

/// One object at one frame, as scored by the metrics.
struct ObjectFrameRecord {
  FrameIndex frame = 0;
  BinaryMask pred;
  BinaryMask gt;
  bool gt_present = false;
  double iou = 0.0;
  double s_r = 0.0;
  bool user_prompted = false;
  bool pseudo_issued = false;
};

/// All annotated frames of one object, in frame order.
using ObjectTrack = std::vector<ObjectFrameRecord>;

inline ObjectFrameRecord make_record(FrameIndex frame, BinaryMask pred, BinaryMask gt, double s_r = 0.0,
                                     bool user_prompted = false, bool pseudo_issued = false) {
  ObjectFrameRecord r;
  r.frame = frame;
  r.iou = iou(pred, gt);
  r.gt_present = !empty(gt);
  r.pred = std::move(pred);
  r.gt = std::move(gt);
  r.s_r = s_r;
  r.user_prompted = user_prompted;
  r.pseudo_issued = pseudo_issued;
  return r;
}

/// Fraction of frames with IoU >= tau. A frame without the object counts
/// only when the prediction is empty too.
inline double robustness_at(const ObjectTrack& track, double tau) {
  if (track.empty()) throw Error(ErrorKind::invalid_argument, "robustness of an empty track");
  std::size_t hits = 0;
  for (const auto& r : track) {
    const bool ok = r.gt_present ? r.iou >= tau : empty(r.pred);
    hits += ok ? 1 : 0;
  }
  return static_cast<double>(hits) / static_cast<double>(track.size());
}

/// Mean over objects of the per-object robustness.
inline double robustness_at(std::span<const ObjectTrack> objects, double tau) {
  if (objects.empty()) throw Error(ErrorKind::invalid_argument, "robustness over no objects");
  double sum = 0.0;
  for (const auto& t : objects) sum += robustness_at(t, tau);
  return sum / static_cast<double>(objects.size());
}

inline std::size_t noc(const ObjectTrack& track) {
  return static_cast<std::size_t>(
      std::count_if(track.begin(), track.end(), [](const auto& r) { return r.user_prompted; }));
}

inline std::size_t noc(std::span<const ObjectTrack> objects) {
  std::size_t n = 0;
  for (const auto& t : objects) n += noc(t);
  return n;
}

inline std::vector<FrameIndex> prompt_frames(const ObjectTrack& track) {
  std::vector<FrameIndex> out;
  for (const auto& r : track) {
    if (r.user_prompted) out.push_back(r.frame);
  }
  return out;
}

/// Mean gap in seconds between consecutive interactions, counting the first
/// and the last frame as interactions.
inline double idi(const ObjectTrack& track, double fps) {
  if (!(fps > 0.0)) throw Error(ErrorKind::invalid_argument, "fps must be positive");
  if (track.size() < 2) throw Error(ErrorKind::invalid_argument, "IDI needs at least two frames");
  std::set<FrameIndex> marks{track.front().frame, track.back().frame};
  for (const auto f : prompt_frames(track)) marks.insert(f);
  const std::vector<FrameIndex> v(marks.begin(), marks.end());
  double total = 0.0;
  for (std::size_t i = 1; i < v.size(); ++i) total += static_cast<double>(v[i] - v[i - 1]);
  return total / static_cast<double>(v.size() - 1) / fps;
}

inline double idi(std::span<const ObjectTrack> objects, double fps) {
  if (objects.empty()) throw Error(ErrorKind::invalid_argument, "IDI over no objects");
  double sum = 0.0;
  for (const auto& t : objects) sum += idi(t, fps);
  return sum / static_cast<double>(objects.size());
}

/// Cumulative interaction score of one object over F frames: each gap g
/// between consecutive prompts adds (F - g + 1) / F, gaps longer than F add
/// nothing. Burst-y prompting scores high.
inline double aci_from_prompts(std::vector<FrameIndex> prompts, std::size_t frame_count) {
  if (frame_count == 0) return 0.0;
  std::sort(prompts.begin(), prompts.end());
  prompts.erase(std::unique(prompts.begin(), prompts.end()), prompts.end());
  const auto F = static_cast<long long>(frame_count);
  long long score = 0;
  for (std::size_t i = 1; i < prompts.size(); ++i) {
    const long long g = prompts[i] - prompts[i - 1];
    if (g <= F) score += F - g + 1;
  }
  return static_cast<double>(score) / static_cast<double>(F);
}

inline double aci(const ObjectTrack& track, bool include_boundaries = false) {
  auto prompts = prompt_frames(track);
  if (include_boundaries && !track.empty()) {
    prompts.push_back(track.front().frame);
    prompts.push_back(track.back().frame);
  }
  return aci_from_prompts(std::move(prompts), track.size());
}

/// Summed over objects.
inline double aci(std::span<const ObjectTrack> objects, bool include_boundaries = false) {
  double sum = 0.0;
  for (const auto& t : objects) sum += aci(t, include_boundaries);
  return sum;
}

/// 1-based ranks; tied values share the mean of the ranks they span.
inline std::vector<double> average_ranks(std::span<const double> xs) {
  std::vector<std::size_t> order(xs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return xs[a] < xs[b]; });
  std::vector<double> ranks(xs.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && xs[order[j + 1]] == xs[order[i]]) ++j;
    const double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) {
    throw Error(ErrorKind::undefined_correlation, "correlation of a constant series");
  }
  return sxy / std::sqrt(sxx * syy);
}

/// Spearman's rho: Pearson correlation of average ranks.
inline double spearman(std::span<const double> xs, std::span<const double> ys) {
  if (xs.size() != ys.size()) throw Error(ErrorKind::shape_mismatch, "series lengths differ");
  if (xs.size() < 2) throw Error(ErrorKind::invalid_argument, "spearman needs two samples");
  const auto rx = average_ranks(xs);
  const auto ry = average_ranks(ys);
  return pearson(rx, ry);
}

// --- per-object summary ------------------------------------------------------

struct MetricsOptions {
  std::vector<double> r_at_taus{0.1, 0.25, 0.5};
  /// Pixels; defaults to the DAVIS convention when unset.
  std::optional<double> boundary_tolerance;
  bool aci_include_boundaries = false;
};

struct ObjectMetrics {
  ObjectId id = 0;
  std::optional<double> jf;
  std::optional<double> j;
  std::optional<double> f;
  std::map<double, double> r_at;
  std::size_t noc = 0;
  std::optional<double> idi_seconds;
  double aci = 0.0;
  /// Proxy convention: -spearman(S_R, IoU); empty when undefined.
  std::optional<double> spearman_rho;
};

inline ObjectMetrics evaluate_object(ObjectId id, const ObjectTrack& track, std::optional<double> fps,
                                     const MetricsOptions& options) {
  ObjectMetrics m;
  m.id = id;
  double jsum = 0.0;
  double fsum = 0.0;
  std::size_t present = 0;
  for (const auto& r : track) {
    if (!r.gt_present) continue;
    const double tol =
        options.boundary_tolerance.value_or(default_boundary_tolerance(r.gt.height(), r.gt.width()));
    jsum += r.iou;
    fsum += boundary_f(r.pred, r.gt, tol);
    ++present;
  }
  if (present > 0) {
    m.j = jsum / static_cast<double>(present);
    m.f = fsum / static_cast<double>(present);
    m.jf = (*m.j + *m.f) / 2.0;
  }
  for (const double tau : options.r_at_taus) m.r_at[tau] = robustness_at(track, tau);
  m.noc = noc(track);
  if (fps && track.size() >= 2) m.idi_seconds = idi(track, *fps);
  m.aci = aci(track, options.aci_include_boundaries);
  if (track.size() >= 2) {
    std::vector<double> s;
    std::vector<double> q;
    for (const auto& r : track) {
      s.push_back(r.s_r);
      q.push_back(r.iou);
    }
    try {
      m.spearman_rho = -spearman(s, q);
    } catch (const Error&) {
      m.spearman_rho.reset();
    }
  }
  return m;
}

}  // namespace zivos

#endif  // ZIVOS_METRICS_HPP
