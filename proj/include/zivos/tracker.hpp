#ifndef ZIVOS_TRACKER_HPP
#define ZIVOS_TRACKER_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>
#include <string>

#include <json.hpp>

#include "zivos/core.hpp"
#include "zivos/io.hpp"
#include "zivos/policy.hpp"

namespace zivos {

struct TrackerStepResult {
  ProbabilityMap probability;
  FrameIndex frame = 0;
};

/// A semi-automatic tracker seen from the outside: one probability map per
/// frame, plus a hook through which the caller says what to keep in memory.
class Tracker {
 public:
  virtual ~Tracker() = default;

  /// Frames must be requested in strictly increasing order.
  virtual TrackerStepResult step(FrameIndex frame) = 0;

  /// `refined` is required for store_refined and ignored otherwise.
  virtual void apply(ObjectId object, MemoryDirective directive,
                     const std::optional<BinaryMask>& refined, FrameIndex frame) = 0;

  virtual std::size_t frame_count() const = 0;
};

namespace detail {

class FrameCursor {
 public:
  explicit FrameCursor(std::size_t count) : count_(count) {}

  void advance(FrameIndex frame) {
    if (frame < 0 || (last_ && frame <= *last_)) {
      throw Error(ErrorKind::out_of_order,
                  "frame " + std::to_string(frame) + " requested after " +
                      (last_ ? std::to_string(*last_) : std::string("start")));
    }
    if (static_cast<std::size_t>(frame) >= count_) {
      throw Error(ErrorKind::end_of_sequence, "frame " + std::to_string(frame) + " past the end");
    }
    last_ = frame;
  }

  std::optional<FrameIndex> last() const noexcept { return last_; }

 private:
  std::size_t count_;
  std::optional<FrameIndex> last_;
};

inline void require_refined(MemoryDirective d, const std::optional<BinaryMask>& refined) {
  if (d == MemoryDirective::store_refined && !refined) {
    throw Error(ErrorKind::invalid_argument, "store_refined without a refined mask");
  }
}

}  // namespace detail

/// Plays back exported probability maps. Directives cannot change what was
/// recorded, so they are only counted.
class ReplayTracker final : public Tracker {
 public:
  explicit ReplayTracker(SequenceManifest manifest)
      : manifest_(std::move(manifest)), cursor_(manifest_.frames.size()) {}

  TrackerStepResult step(FrameIndex frame) override {
    cursor_.advance(frame);
    return {load_probability_map(manifest_.resolve(manifest_.frames[static_cast<std::size_t>(frame)].prob)),
            frame};
  }

  void apply(ObjectId, MemoryDirective directive, const std::optional<BinaryMask>& refined,
             FrameIndex) override {
    detail::require_refined(directive, refined);
    ++directive_counts_[static_cast<std::size_t>(directive)];
  }

  std::size_t frame_count() const override { return manifest_.frames.size(); }

  std::size_t directive_count(MemoryDirective d) const {
    return directive_counts_[static_cast<std::size_t>(d)];
  }

 private:
  SequenceManifest manifest_;
  detail::FrameCursor cursor_;
  std::array<std::size_t, 3> directive_counts_{};
};

// --- synthetic scenes ------------------------------------------------------

enum class ScenarioKind { drift, distractor, occlusion };

inline std::string to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::drift: return "drift";
    case ScenarioKind::distractor: return "distractor";
    case ScenarioKind::occlusion: return "occlusion";
  }
  return "unknown";
}

inline ScenarioKind scenario_kind_from_string(const std::string& s) {
  if (s == "drift") return ScenarioKind::drift;
  if (s == "distractor") return ScenarioKind::distractor;
  if (s == "occlusion") return ScenarioKind::occlusion;
  throw Error(ErrorKind::invalid_argument, "unknown scenario '" + s + "'");
}

/// Parameters of a synthetic sequence: one disk-shaped target, optionally an
/// identical distractor, and a tracker whose memory belief drifts away from
/// the target unless it is corrected.
///
/// The tracker output at a pixel is a mixture of a memory term (a soft disk
/// around the belief) and an appearance term (soft disks around every
/// visible object):
///   p_obj = memory_weight * memory + (1 - memory_weight) * appearance
/// where each soft disk is logistic((radius - distance) / temperature).
struct SyntheticScenario {
  ScenarioKind kind = ScenarioKind::drift;
  int frames = 80;
  int height = 64;
  int width = 64;
  double object_radius = 8.0;
  double speed = 0.5;        // object motion, pixels/frame
  double drift_rate = 0.2;   // belief drift while uncorrected, pixels/frame
  int event_frame = 40;      // distractor swap or occlusion start
  int occlusion_span = 8;
  double temperature = 0.4;
  double memory_weight = 0.7;
  /// Distractor only: a transient confusion before the swap, during which
  /// `near_miss_weight` of the memory belief sits on the distractor.
  int near_miss_frame = 20;
  double near_miss_weight = 0.25;
  std::uint64_t seed = 42;

  void validate() const {
    if (frames < 2) throw Error(ErrorKind::invalid_argument, "scenario needs at least 2 frames");
    if (event_frame < 0 || event_frame >= frames) {
      throw Error(ErrorKind::invalid_argument, "event_frame must lie inside the sequence");
    }
    if (!(temperature > 0.0)) throw Error(ErrorKind::invalid_argument, "temperature must be > 0");
    if (height < 8 || width < 8) throw Error(ErrorKind::invalid_argument, "grid too small");
    if (!(object_radius > 0.0)) throw Error(ErrorKind::invalid_argument, "radius must be > 0");
    if (!(memory_weight > 0.5 && memory_weight < 1.0)) {
      throw Error(ErrorKind::invalid_argument, "memory_weight must lie in (0.5, 1)");
    }
    if (drift_rate < 0.0 || speed < 0.0 || occlusion_span < 0) {
      throw Error(ErrorKind::invalid_argument, "negative scenario rate");
    }
  }
};

/// Per-kind defaults used by the `synth` command.
inline SyntheticScenario default_scenario(ScenarioKind kind, int frames = 80, std::uint64_t seed = 42) {
  SyntheticScenario s;
  s.kind = kind;
  s.frames = frames;
  s.seed = seed;
  s.event_frame = frames / 2;
  s.near_miss_frame = frames / 4;
  switch (kind) {
    case ScenarioKind::drift:
      s.drift_rate = 0.2;
      break;
    case ScenarioKind::distractor:
    case ScenarioKind::occlusion:
      s.drift_rate = 0.0;
      break;
  }
  return s;
}

inline nlohmann::json to_json(const SyntheticScenario& s) {
  return {{"kind", to_string(s.kind)},       {"frames", s.frames},
          {"height", s.height},              {"width", s.width},
          {"object_radius", s.object_radius}, {"speed", s.speed},
          {"drift_rate", s.drift_rate},      {"event_frame", s.event_frame},
          {"occlusion_span", s.occlusion_span}, {"temperature", s.temperature},
          {"memory_weight", s.memory_weight}, {"near_miss_frame", s.near_miss_frame},
          {"near_miss_weight", s.near_miss_weight}, {"seed", s.seed}};
}

inline SyntheticScenario scenario_from_json(const nlohmann::json& j) {
  try {
    const auto kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    SyntheticScenario s = default_scenario(kind, j.value("frames", 80), j.value("seed", std::uint64_t{42}));
    s.height = j.value("height", s.height);
    s.width = j.value("width", s.width);
    s.object_radius = j.value("object_radius", s.object_radius);
    s.speed = j.value("speed", s.speed);
    s.drift_rate = j.value("drift_rate", s.drift_rate);
    s.event_frame = j.value("event_frame", s.event_frame);
    s.occlusion_span = j.value("occlusion_span", s.occlusion_span);
    s.temperature = j.value("temperature", s.temperature);
    s.memory_weight = j.value("memory_weight", s.memory_weight);
    s.near_miss_frame = j.value("near_miss_frame", s.near_miss_frame);
    s.near_miss_weight = j.value("near_miss_weight", s.near_miss_weight);
    s.validate();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad scenario: ") + e.what());
  }
}

struct Point {
  double row = 0.0;
  double col = 0.0;
};

namespace detail {

inline double logistic(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Triangle wave keeping x inside [lo, hi].
inline double reflect(double x, double lo, double hi) {
  const double span = hi - lo;
  if (span <= 0.0) return lo;
  double t = std::fmod(x - lo, 2.0 * span);
  if (t < 0.0) t += 2.0 * span;
  return lo + (t <= span ? t : 2.0 * span - t);
}

// Platform-independent uniform draw in [lo, hi).
inline double uniform(std::mt19937_64& rng, double lo, double hi) {
  const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return lo + (hi - lo) * u;
}

struct Track {
  Point start;
  Point velocity;
  double row_lo, row_hi, col_lo, col_hi;

  Point at(FrameIndex f) const {
    const double t = static_cast<double>(f);
    return {reflect(start.row + velocity.row * t, row_lo, row_hi),
            reflect(start.col + velocity.col * t, col_lo, col_hi)};
  }
};

}  // namespace detail

/// Object tracks and drift direction, all drawn from the scenario seed.
struct SceneGeometry {
  detail::Track target;
  std::optional<detail::Track> distractor;
  Point drift_direction;

  explicit SceneGeometry(const SyntheticScenario& s) {
    std::mt19937_64 rng(s.seed);
    const double r = s.object_radius;
    const double row_lo = r + 1.0;
    const double row_hi = s.height - r - 2.0;
    auto make_track = [&](double col_lo, double col_hi) {
      detail::Track t{};
      t.row_lo = row_lo;
      t.row_hi = std::max(row_lo, row_hi);
      t.col_lo = col_lo;
      t.col_hi = std::max(col_lo, col_hi);
      t.start = {detail::uniform(rng, t.row_lo, t.row_hi), detail::uniform(rng, t.col_lo, t.col_hi)};
      const double angle = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
      t.velocity = {s.speed * std::sin(angle), s.speed * std::cos(angle)};
      return t;
    };
    if (s.kind == ScenarioKind::distractor) {
      // Target in the left half, distractor in the right half: they never
      // overlap, so the ground truth is unambiguous.
      const double half = s.width / 2.0;
      target = make_track(r + 1.0, half - r - 2.0);
      distractor = make_track(half + r + 1.0, s.width - r - 2.0);
    } else {
      target = make_track(r + 1.0, s.width - r - 2.0);
    }
    const double angle = detail::uniform(rng, 0.0, 2.0 * std::numbers::pi);
    drift_direction = {std::sin(angle), std::cos(angle)};
  }
};

/// Pixels strictly inside the disk of `radius` around `center`.
inline BinaryMask render_disk(int height, int width, Point center, double radius) {
  BinaryMask m(height, width);
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      const double d = std::hypot(r - center.row, c - center.col);
      m(r, c) = d < radius ? 1 : 0;
    }
  }
  return m;
}

/// Tracker with controllable failure modes. Its belief responds to memory
/// directives: store_refined re-anchors it on the refined mask, skip makes
/// it go stale (drift grows by 1.5x per consecutive skip), store_original
/// resets the staleness.
class SyntheticTracker final : public Tracker {
 public:
  static constexpr double kStalenessGrowth = 1.5;

  explicit SyntheticTracker(SyntheticScenario scenario)
      : scenario_(scenario), geometry_(scenario), cursor_(static_cast<std::size_t>(scenario.frames)) {
    scenario_.validate();
    pending_swap_ = scenario_.kind == ScenarioKind::distractor;
  }

  const SyntheticScenario& scenario() const noexcept { return scenario_; }
  const SceneGeometry& geometry() const noexcept { return geometry_; }

  bool occluded(FrameIndex f) const {
    return scenario_.kind == ScenarioKind::occlusion && f >= scenario_.event_frame &&
           f < scenario_.event_frame + scenario_.occlusion_span;
  }

  Point object_center(bool distractor, FrameIndex f) const {
    return distractor ? geometry_.distractor->at(f) : geometry_.target.at(f);
  }

  /// Ground truth of the target at frame f (empty while occluded).
  BinaryMask ground_truth(FrameIndex f) const {
    if (occluded(f)) return BinaryMask(scenario_.height, scenario_.width);
    return render_disk(scenario_.height, scenario_.width, geometry_.target.at(f),
                       scenario_.object_radius);
  }

  /// Grey-level rendering of the scene (both objects look the same).
  LabelMask render_image(FrameIndex f) const {
    LabelMask img(scenario_.height, scenario_.width, 40);
    auto paint = [&](Point c) {
      const auto disk = render_disk(scenario_.height, scenario_.width, c, scenario_.object_radius);
      for (std::size_t i = 0; i < disk.size(); ++i) {
        if (disk.values()[i]) img.values()[i] = 200;
      }
    };
    if (!occluded(f)) paint(geometry_.target.at(f));
    if (geometry_.distractor) paint(geometry_.distractor->at(f));
    return img;
  }

  TrackerStepResult step(FrameIndex frame) override {
    const auto previous = cursor_.last();
    cursor_.advance(frame);
    for (FrameIndex f = previous ? *previous + 1 : 0; f <= frame; ++f) advance_belief(f);
    current_ = frame;
    override_.reset();
    return {render_probability(frame), frame};
  }

  void apply(ObjectId object, MemoryDirective directive, const std::optional<BinaryMask>& refined,
             FrameIndex frame) override {
    detail::require_refined(directive, refined);
    if (object != 1) return;
    switch (directive) {
      case MemoryDirective::store_original:
        staleness_ = 1.0;
        break;
      case MemoryDirective::skip:
        staleness_ *= kStalenessGrowth;
        break;
      case MemoryDirective::store_refined:
        staleness_ = 1.0;
        reanchor(*refined, frame);
        break;
    }
  }

  std::size_t frame_count() const override { return static_cast<std::size_t>(scenario_.frames); }

  double staleness() const noexcept { return staleness_; }
  bool locked_on_distractor() const noexcept { return on_distractor_; }
  Point belief_offset() const noexcept { return offset_; }

  Point belief_center() const {
    const Point c = object_center(on_distractor_, current_);
    return {c.row + offset_.row, c.col + offset_.col};
  }

  /// Current belief as a mask: the refined mask right after a re-anchor,
  /// the belief disk otherwise.
  BinaryMask belief_mask() const {
    if (override_) return *override_;
    return render_disk(scenario_.height, scenario_.width, belief_center(), scenario_.object_radius);
  }

 private:
  void advance_belief(FrameIndex f) {
    if (f == 0) return;
    if (pending_swap_ && f > scenario_.event_frame) {
      on_distractor_ = true;
      pending_swap_ = false;
    }
    if (occluded(f)) {
      // The memory cannot follow an invisible object: hold the belief still.
      const Point now = object_center(on_distractor_, f);
      const Point before = object_center(on_distractor_, f - 1);
      offset_.row -= now.row - before.row;
      offset_.col -= now.col - before.col;
    }
    const double step = scenario_.drift_rate * staleness_;
    offset_.row += step * geometry_.drift_direction.row;
    offset_.col += step * geometry_.drift_direction.col;
  }

  // Weight of the memory belief that sits on the other object this frame.
  double confusion(FrameIndex f) const {
    if (scenario_.kind != ScenarioKind::distractor) return 0.0;
    if (pending_swap_ && f == scenario_.event_frame) return 0.5;
    if (f == scenario_.near_miss_frame && f < scenario_.event_frame) return scenario_.near_miss_weight;
    return 0.0;
  }

  ProbabilityMap render_probability(FrameIndex f) const {
    const auto& s = scenario_;
    const double radius = s.object_radius;
    const double temp = s.temperature;
    auto soft_disk = [&](Point c, int r, int col) {
      return detail::logistic((radius - std::hypot(r - c.row, col - c.col)) / temp);
    };
    const Point locked = object_center(on_distractor_, f);
    const Point belief{locked.row + offset_.row, locked.col + offset_.col};
    const double w = confusion(f);
    std::optional<Point> other_belief;
    if (geometry_.distractor) {
      const Point o = object_center(!on_distractor_, f);
      other_belief = Point{o.row + offset_.row, o.col + offset_.col};
    }
    const bool target_visible = !occluded(f);

    std::vector<float> values(static_cast<std::size_t>(s.height) * static_cast<std::size_t>(s.width) * 2);
    for (int r = 0; r < s.height; ++r) {
      for (int c = 0; c < s.width; ++c) {
        double p = 0.0;
        if (target_visible) {
          double memory = soft_disk(belief, r, c);
          if (w > 0.0 && other_belief) memory = (1.0 - w) * memory + w * soft_disk(*other_belief, r, c);
          double appearance = soft_disk(geometry_.target.at(f), r, c);
          if (geometry_.distractor) appearance = std::max(appearance, soft_disk(geometry_.distractor->at(f), r, c));
          p = s.memory_weight * memory + (1.0 - s.memory_weight) * appearance;
        }
        const auto obj = static_cast<float>(p);
        const std::size_t i = (static_cast<std::size_t>(r) * static_cast<std::size_t>(s.width) +
                               static_cast<std::size_t>(c)) * 2;
        values[i] = 1.0f - obj;
        values[i + 1] = obj;
      }
    }
    return ProbabilityMap(s.height, s.width, 2, std::move(values));
  }

  void reanchor(const BinaryMask& refined, FrameIndex frame) {
    override_ = refined;
    const auto n = count(refined);
    if (n == 0) return;
    Point centroid{};
    for (int r = 0; r < refined.height(); ++r) {
      for (int c = 0; c < refined.width(); ++c) {
        if (refined(r, c)) {
          centroid.row += r;
          centroid.col += c;
        }
      }
    }
    centroid.row /= static_cast<double>(n);
    centroid.col /= static_cast<double>(n);

    // Lock onto the object whose appearance overlaps the refined mask most.
    auto overlap = [&](bool distractor) {
      const auto disk = render_disk(scenario_.height, scenario_.width, object_center(distractor, frame),
                                    scenario_.object_radius);
      std::size_t k = 0;
      for (std::size_t i = 0; i < disk.size(); ++i) k += (disk.values()[i] && refined.values()[i]) ? 1 : 0;
      return k;
    };
    bool lock_distractor = false;
    if (geometry_.distractor) {
      const auto t = overlap(false);
      const auto d = overlap(true);
      if (d > t) {
        lock_distractor = true;
      } else if (d == t) {
        auto dist = [&](bool which) {
          const Point c = object_center(which, frame);
          return std::hypot(c.row - centroid.row, c.col - centroid.col);
        };
        lock_distractor = dist(true) < dist(false);
      }
    }
    on_distractor_ = lock_distractor;
    if (frame >= scenario_.event_frame) pending_swap_ = false;

    // Offset relative to the locked object's own pixel footprint, so that a
    // mask identical to the object leaves no residual offset.
    const auto footprint = occluded(frame) && !lock_distractor
                               ? BinaryMask()
                               : render_disk(scenario_.height, scenario_.width,
                                             object_center(lock_distractor, frame), scenario_.object_radius);
    Point anchor = object_center(lock_distractor, frame);
    if (footprint.size() > 0 && count(footprint) > 0) {
      Point fc{};
      for (int r = 0; r < footprint.height(); ++r) {
        for (int c = 0; c < footprint.width(); ++c) {
          if (footprint(r, c)) {
            fc.row += r;
            fc.col += c;
          }
        }
      }
      const auto m = static_cast<double>(count(footprint));
      offset_ = {centroid.row - fc.row / m, centroid.col - fc.col / m};
    } else {
      offset_ = {centroid.row - anchor.row, centroid.col - anchor.col};
    }
  }

  SyntheticScenario scenario_;
  SceneGeometry geometry_;
  detail::FrameCursor cursor_;
  FrameIndex current_ = 0;
  Point offset_{};
  double staleness_ = 1.0;
  bool on_distractor_ = false;
  bool pending_swap_ = false;
  std::optional<BinaryMask> override_;
};

/// Writes a synthetic sequence (ZIVP maps, PGM ground truth and images, and
/// manifest.json) as the tracker produces it when nothing intervenes.
inline SequenceManifest synth_generate(const SyntheticScenario& scenario, const fs::path& out_dir) {
  scenario.validate();
  fs::create_directories(out_dir / "frames");
  SyntheticTracker tracker(scenario);
  SequenceManifest m;
  m.name = "synth_" + to_string(scenario.kind) + "_seed" + std::to_string(scenario.seed);
  m.fps = 10.0;
  m.objects = {1};
  m.scenario = to_json(scenario);
  m.base_dir = out_dir;
  for (FrameIndex f = 0; f < scenario.frames; ++f) {
    char stem[32];
    std::snprintf(stem, sizeof stem, "%05lld", static_cast<long long>(f));
    const fs::path prob = fs::path("frames") / (std::string("prob_") + stem + ".zivp");
    const fs::path gt = fs::path("frames") / (std::string("gt_") + stem + ".pgm");
    const fs::path image = fs::path("frames") / (std::string("image_") + stem + ".pgm");
    const auto result = tracker.step(f);
    const auto truth = tracker.ground_truth(f);
    save_probability_map(result.probability, out_dir / prob);
    save_mask_pgm(to_label_mask(truth, 1), out_dir / gt);
    save_mask_pgm(tracker.render_image(f), out_dir / image);
    // Same initialisation as an episode seeded with the ground truth.
    if (f == 0) {
      tracker.apply(1, MemoryDirective::store_refined, truth, f);
    } else {
      tracker.apply(1, MemoryDirective::store_original, std::nullopt, f);
    }
    m.frames.push_back({prob, gt, image});
  }
  save_manifest(m, out_dir / "manifest.json");
  return m;
}

}  // namespace zivos

#endif  // ZIVOS_TRACKER_HPP
