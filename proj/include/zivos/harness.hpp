#ifndef ZIVOS_HARNESS_HPP
#define ZIVOS_HARNESS_HPP

#include <atomic>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "zivos/core.hpp"
#include "zivos/interactions.hpp"
#include "zivos/io.hpp"
#include "zivos/metrics.hpp"
#include "zivos/policy.hpp"
#include "zivos/refiner.hpp"
#include "zivos/tracker.hpp"
#include "zivos/uncertainty.hpp"

namespace zivos {

enum class AgentMode { simulated_misclassified, simulated_gt_centroid, live, none };
enum class InitMode { gt_mask, init_click };
/// Which mask's region entropy enters the uncertainty series after a
/// correction: the tracker's own prediction or the refined one.
enum class SeriesSource { original, final };
enum class RefinerKind { oracle, flood, external };

struct EpisodeConfig {
  PolicyConfig policy;
  RefinerKind refiner = RefinerKind::oracle;
  double flood_threshold = 0.5;
  ExternalRefinerConfig external{"", "exchange", std::chrono::milliseconds(30000)};
  AgentMode agent = AgentMode::simulated_misclassified;
  InitMode init = InitMode::gt_mask;
  SeriesSource series_source = SeriesSource::original;
  MetricsOptions metrics;

  /// Without an agent nobody can answer a user request.
  void normalize() {
    if (agent == AgentMode::none) policy.enable_user = false;
    policy.validate();
  }
};

inline AgentMode agent_from_string(const std::string& s) {
  if (s == "simulated" || s == "misclassified" || s == "simulated_misclassified") {
    return AgentMode::simulated_misclassified;
  }
  if (s == "gt-centroid" || s == "gt_centroid" || s == "simulated_gt_centroid") {
    return AgentMode::simulated_gt_centroid;
  }
  if (s == "live") return AgentMode::live;
  if (s == "none") return AgentMode::none;
  throw Error(ErrorKind::invalid_argument, "unknown agent mode '" + s + "'");
}

inline InitMode init_from_string(const std::string& s) {
  if (s == "gt" || s == "gt_mask") return InitMode::gt_mask;
  if (s == "click" || s == "init_click") return InitMode::init_click;
  throw Error(ErrorKind::invalid_argument, "unknown init mode '" + s + "'");
}

/// Reads the run configuration. Policy keys live at the top level; omitted
/// keys keep their defaults.
inline EpisodeConfig config_from_json(const nlohmann::json& j) {
  EpisodeConfig c;
  c.policy = policy_from_json(j);
  try {
    const auto refiner = j.value("refiner", std::string("oracle"));
    if (refiner == "oracle") {
      c.refiner = RefinerKind::oracle;
    } else if (refiner == "flood") {
      c.refiner = RefinerKind::flood;
    } else if (refiner == "external") {
      c.refiner = RefinerKind::external;
    } else {
      throw Error(ErrorKind::invalid_argument, "unknown refiner '" + refiner + "'");
    }
    c.flood_threshold = j.value("flood_threshold", c.flood_threshold);
    c.external.command = j.value("external_refiner_cmd", std::string());
    c.external.exchange_dir = j.value("exchange_dir", std::string("exchange"));
    c.external.timeout = std::chrono::milliseconds(
        static_cast<long long>(1000.0 * j.value("external_timeout_s", 30.0)));
    if (j.contains("agent")) c.agent = agent_from_string(j.at("agent").get<std::string>());
    if (j.contains("init")) c.init = init_from_string(j.at("init").get<std::string>());
    const auto source = j.value("series_source", std::string("original"));
    if (source == "original") {
      c.series_source = SeriesSource::original;
    } else if (source == "final") {
      c.series_source = SeriesSource::final;
    } else {
      throw Error(ErrorKind::invalid_argument, "series_source must be 'original' or 'final'");
    }
    if (j.contains("r_at_taus")) c.metrics.r_at_taus = j.at("r_at_taus").get<std::vector<double>>();
    if (j.contains("boundary_tolerance")) c.metrics.boundary_tolerance = j.at("boundary_tolerance").get<double>();
    c.metrics.aci_include_boundaries = j.value("aci_include_boundaries", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad config: ") + e.what());
  }
  return c;
}

inline std::unique_ptr<Refiner> make_refiner(const EpisodeConfig& config, const std::string& sequence = {}) {
  switch (config.refiner) {
    case RefinerKind::oracle: return std::make_unique<OracleRefiner>();
    case RefinerKind::flood: return std::make_unique<FloodRefiner>(config.flood_threshold);
    case RefinerKind::external: {
      auto ext = config.external;
      if (!sequence.empty()) ext.exchange_dir /= sequence;
      return std::make_unique<ExternalRefiner>(std::move(ext));
    }
  }
  throw Error(ErrorKind::invalid_argument, "unknown refiner");
}

/// Synthetic manifests carry their scenario and get a live synthetic
/// tracker; everything else is replayed from disk.
inline std::unique_ptr<Tracker> make_tracker(const SequenceManifest& manifest) {
  if (!manifest.scenario.is_null()) {
    return std::make_unique<SyntheticTracker>(scenario_from_json(manifest.scenario));
  }
  return std::make_unique<ReplayTracker>(manifest);
}

// --- episode -----------------------------------------------------------------

struct ObjectStepLog {
  ObjectId object = 0;
  RegionEntropy s_r;
  double delta = 0.0;
  InteractionDecision decision = InteractionDecision::none;
  MemoryDirective directive = MemoryDirective::store_original;
  std::optional<Click> click;
};

struct FrameLog {
  FrameIndex frame = 0;
  std::vector<ObjectStepLog> objects;
  nlohmann::json events = nlohmann::json::array();
};

struct EpisodeLog {
  std::string sequence;
  std::optional<double> fps;
  std::vector<ObjectId> objects;
  /// Same order as `objects`.
  std::vector<ObjectTrack> tracks;
  std::vector<FrameLog> frames;
  std::optional<std::string> error;

  std::size_t click_count() const {
    std::size_t n = 0;
    for (const auto& f : frames) {
      for (const auto& o : f.objects) n += o.click ? 1 : 0;
    }
    return n;
  }
};

/// What a live user is asked to look at.
struct UserPrompt {
  FrameIndex frame = 0;
  ObjectId object = 0;
  double s_r = 0.0;
  double delta = 0.0;
  const EntropyMap* entropy = nullptr;
  const BinaryMask* prediction = nullptr;
};

/// Progress reported after each object decision and at frame end.
struct ProgressUpdate {
  FrameIndex frame = 0;
  ObjectId object = 0;
  double s_r = 0.0;
  double delta = 0.0;
  std::size_t noc_so_far = 0;
};

struct EpisodeHooks {
  /// Live agent: a click, or nothing when the user skips.
  std::function<std::optional<Click>(const UserPrompt&)> live_click;
  /// Called before a frame is requested from the tracker.
  std::function<void(FrameIndex)> before_frame;
  /// Called once a frame is complete, with its entropy map and final masks.
  std::function<void(const ProgressUpdate&, const EntropyMap&, const std::map<ObjectId, BinaryMask>&)>
      after_frame;
};

namespace detail {

inline BinaryMask object_gt(const LabelMask& gt_labels, ObjectId object) {
  return extract_object_mask(gt_labels, object);
}

inline float channel(const ProbabilityMap& prob, int r, int c, ObjectId object) {
  return object < prob.classes() ? prob(r, c, object) : 0.0f;
}

// A pixel claimed by several refined masks goes to the object with the
// higher original probability there; ties go to the lower id.
inline void resolve_conflicts(std::map<ObjectId, BinaryMask>& refined, const ProbabilityMap& prob) {
  if (refined.size() < 2) return;
  const int h = prob.height();
  const int w = prob.width();
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      std::optional<ObjectId> winner;
      float best = -1.0f;
      int claims = 0;
      for (const auto& [id, mask] : refined) {
        if (!mask(r, c)) continue;
        ++claims;
        const float p = channel(prob, r, c, id);
        if (p > best) {
          best = p;
          winner = id;
        }
      }
      if (claims < 2) continue;
      for (auto& [id, mask] : refined) {
        if (id != *winner) mask(r, c) = 0;
      }
    }
  }
}

inline nlohmann::json click_json(const Click& c) {
  return {{"frame", c.frame},
          {"object", c.object},
          {"row", c.row},
          {"col", c.col},
          {"polarity", to_string(c.polarity)},
          {"origin", to_string(c.origin)}};
}

}  // namespace detail

/// Runs one sequence through the interaction loop. Tracker or refiner
/// failures stop the episode; the frames completed so far stay in the log
/// and the failure is recorded in `error`.
inline EpisodeLog run_episode(const SequenceManifest& manifest, Tracker& tracker, Refiner& refiner,
                              EpisodeConfig config, const EpisodeHooks& hooks = {}) {
  config.normalize();
  const PolicyConfig& policy = config.policy;
  EpisodeLog log;
  log.sequence = manifest.name;
  log.fps = manifest.fps;
  log.objects = manifest.objects;
  log.tracks.resize(manifest.objects.size());
  std::vector<UncertaintySeries> series(manifest.objects.size());
  std::size_t noc_so_far = 0;

  const auto frame_count = std::min(manifest.frames.size(), tracker.frame_count());
  try {
    for (FrameIndex f = 0; f < static_cast<FrameIndex>(frame_count); ++f) {
      if (hooks.before_frame) hooks.before_frame(f);
      const auto step = tracker.step(f);
      const ProbabilityMap& prob = step.probability;
      const LabelMask labels = argmax_labels(prob);
      const LabelMask gt_labels = load_mask_pgm(manifest.resolve(manifest.frames[static_cast<std::size_t>(f)].gt));
      require_same_shape(gt_labels, prob, "ground truth vs probability map");
      const EntropyMap entropy = entropy_map(prob);

      FrameLog frame_log;
      frame_log.frame = f;
      std::map<ObjectId, BinaryMask> original;
      std::map<ObjectId, BinaryMask> truth;
      std::map<ObjectId, BinaryMask> refined;
      std::map<ObjectId, bool> user_corrected;
      std::map<ObjectId, bool> pseudo_corrected;
      ProgressUpdate progress;
      progress.frame = f;

      auto refine_with = [&](const Click& click, const BinaryMask& gt) {
        RefinerRequest req;
        req.frame = f;
        req.object = click.object;
        req.clicks = {click};
        req.probability = prob;
        req.ground_truth = gt;
        return refiner.refine(req);
      };

      for (std::size_t k = 0; k < manifest.objects.size(); ++k) {
        const ObjectId id = manifest.objects[k];
        original[id] = extract_object_mask(labels, id);
        truth[id] = detail::object_gt(gt_labels, id);
        const BinaryMask& pred = original[id];
        const BinaryMask dilated = dilate_mask(pred, policy.dilation_radius);
        ObjectStepLog olog;
        olog.object = id;
        olog.s_r = region_entropy(entropy, dilated);

        if (f == 0) {
          // Initialisation: the object is designated either by its mask or by
          // a single click turned into a mask by the refiner.
          if (config.init == InitMode::gt_mask) {
            refined[id] = truth[id];
            frame_log.events.push_back({{"object", id}, {"type", "init_mask"}});
          } else if (!empty(truth[id])) {
            const Click click = gt_centroid_click(truth[id], f, id, ClickOrigin::init);
            refined[id] = refine_with(click, truth[id]);
            frame_log.events.push_back({{"object", id}, {"type", "init_click"}, {"click", detail::click_json(click)}});
          } else {
            refined[id] = BinaryMask(pred.height(), pred.width());
          }
          olog.delta = series[k].push_and_delta(f, olog.s_r);
          frame_log.objects.push_back(std::move(olog));
          continue;
        }

        olog.delta = series[k].delta_for(f, olog.s_r.value);
        const double signal = policy.trigger_on == TriggerSource::delta ? olog.delta : olog.s_r.value;
        // An empty prediction gives the refiner nothing to anchor on.
        olog.decision = olog.s_r.absent ? InteractionDecision::none : decide_interaction(signal, policy);

        if (olog.decision == InteractionDecision::request_user) {
          std::optional<Click> click;
          switch (config.agent) {
            case AgentMode::simulated_misclassified:
              if (pred != truth[id]) click = simulated_user_click(pred, truth[id], f, id);
              break;
            case AgentMode::simulated_gt_centroid:
              if (pred != truth[id] && !empty(truth[id])) click = gt_centroid_click(truth[id], f, id);
              break;
            case AgentMode::live:
              if (hooks.live_click) {
                UserPrompt prompt{f, id, olog.s_r.value, olog.delta, &entropy, &pred};
                click = hooks.live_click(prompt);
                if (click) {
                  click->frame = f;
                  click->object = id;
                  click->origin = ClickOrigin::user;
                }
              }
              break;
            case AgentMode::none:
              break;
          }
          if (click) {
            olog.click = click;
            refined[id] = refine_with(*click, truth[id]);
            user_corrected[id] = true;
            ++noc_so_far;
            frame_log.events.push_back({{"object", id}, {"type", "user_click"}, {"click", detail::click_json(*click)}});
          } else {
            const char* why = config.agent == AgentMode::live ? "user_skipped" : "user_satisfied";
            frame_log.events.push_back({{"object", id}, {"type", why}});
          }
        } else if (olog.decision == InteractionDecision::pseudo) {
          try {
            const Click click =
                pseudo_click(dilated, distance_field(pred), entropy, f, id);
            olog.click = click;
            refined[id] = refine_with(click, truth[id]);
            pseudo_corrected[id] = true;
            frame_log.events.push_back({{"object", id}, {"type", "pseudo_click"}, {"click", detail::click_json(click)}});
          } catch (const Error& e) {
            if (e.kind() != ErrorKind::no_valid_site && e.kind() != ErrorKind::empty_mask) throw;
            olog.decision = InteractionDecision::none;
            frame_log.events.push_back({{"object", id}, {"type", "pseudo_no_site"}});
          }
        }
        progress.object = id;
        progress.s_r = olog.s_r.value;
        progress.delta = olog.delta;
        frame_log.objects.push_back(std::move(olog));
      }

      detail::resolve_conflicts(refined, prob);

      std::map<ObjectId, BinaryMask> final_masks;
      for (std::size_t k = 0; k < manifest.objects.size(); ++k) {
        const ObjectId id = manifest.objects[k];
        auto& olog = frame_log.objects[k];
        const auto it = refined.find(id);
        const bool has_refined = it != refined.end();
        BinaryMask final_mask = has_refined ? it->second : original[id];

        if (f == 0) {
          olog.directive = MemoryDirective::store_refined;
          tracker.apply(id, olog.directive, final_mask, f);
        } else {
          // The gate looks at the tracker's own prediction even when a
          // refinement replaced it.
          olog.directive = memory_gate(olog.s_r, user_corrected[id], policy, pseudo_corrected[id]);
          std::optional<BinaryMask> stored;
          if (olog.directive == MemoryDirective::store_refined) stored = final_mask;
          tracker.apply(id, olog.directive, stored, f);
          if (olog.directive == MemoryDirective::skip) {
            frame_log.events.push_back({{"object", id}, {"type", "memory_skip"}});
          }
          if (config.series_source == SeriesSource::final && has_refined) {
            series[k].push_and_delta(f, region_entropy(entropy, dilate_mask(final_mask, policy.dilation_radius)));
          } else {
            series[k].push_and_delta(f, olog.s_r);
          }
        }

        log.tracks[k].push_back(make_record(f, final_mask, truth[id], olog.s_r.value,
                                            user_corrected[id], pseudo_corrected[id]));
        final_masks[id] = std::move(final_mask);
      }

      log.frames.push_back(std::move(frame_log));
      progress.noc_so_far = noc_so_far;
      if (hooks.after_frame) hooks.after_frame(progress, entropy, final_masks);
    }
  } catch (const Error& e) {
    log.error = e.what();
  } catch (const std::exception& e) {
    log.error = e.what();
  }
  return log;
}

inline nlohmann::json episode_log_to_json(const EpisodeLog& log) {
  nlohmann::json j;
  j["sequence"] = log.sequence;
  j["objects"] = log.objects;
  if (log.error) j["error"] = *log.error;
  auto frames = nlohmann::json::array();
  for (std::size_t i = 0; i < log.frames.size(); ++i) {
    const auto& fl = log.frames[i];
    nlohmann::json fj;
    fj["frame"] = fl.frame;
    auto objs = nlohmann::json::array();
    for (std::size_t k = 0; k < fl.objects.size(); ++k) {
      const auto& o = fl.objects[k];
      nlohmann::json oj{{"id", o.object},
                        {"s_r", o.s_r.value},
                        {"region_size", o.s_r.region_size},
                        {"absent", o.s_r.absent},
                        {"delta", o.delta},
                        {"decision", to_string(o.decision)},
                        {"directive", to_string(o.directive)}};
      if (k < log.tracks.size() && i < log.tracks[k].size()) {
        const auto& rec = log.tracks[k][i];
        oj["iou"] = rec.iou;
        oj["gt_present"] = rec.gt_present;
        oj["user_prompted"] = rec.user_prompted;
        oj["pseudo_issued"] = rec.pseudo_issued;
      }
      oj["click"] = o.click ? detail::click_json(*o.click) : nlohmann::json(nullptr);
      objs.push_back(std::move(oj));
    }
    fj["objects"] = std::move(objs);
    fj["events"] = fl.events;
    frames.push_back(std::move(fj));
  }
  j["frames"] = std::move(frames);
  return j;
}

// --- benchmark -----------------------------------------------------------------

struct SequenceResult {
  std::string name;
  std::string manifest;
  std::optional<std::string> error;
  std::optional<double> fps;
  std::vector<ObjectMetrics> objects;
  std::vector<ObjectTrack> tracks;
};

struct MetricsReport {
  std::vector<SequenceResult> sequences;
  MetricsOptions options;
};

inline SequenceResult evaluate_episode(const EpisodeLog& log, const MetricsOptions& options) {
  SequenceResult r;
  r.name = log.sequence;
  r.error = log.error;
  r.fps = log.fps;
  r.tracks = log.tracks;
  for (std::size_t k = 0; k < log.objects.size(); ++k) {
    if (log.tracks[k].empty()) continue;
    r.objects.push_back(evaluate_object(log.objects[k], log.tracks[k], log.fps, options));
  }
  return r;
}

inline SequenceResult run_sequence(const fs::path& manifest_path, const EpisodeConfig& config) {
  SequenceResult result;
  result.manifest = manifest_path.generic_string();
  try {
    const auto manifest = load_manifest(manifest_path);
    auto tracker = make_tracker(manifest);
    auto refiner = make_refiner(config, manifest.name);
    const auto log = run_episode(manifest, *tracker, *refiner, config);
    auto evaluated = evaluate_episode(log, config.metrics);
    evaluated.manifest = result.manifest;
    return evaluated;
  } catch (const std::exception& e) {
    result.name = manifest_path.stem().string();
    result.error = e.what();
    return result;
  }
}

/// Runs every manifest (in parallel across `jobs` workers); the report keeps
/// the input order.
inline MetricsReport run_benchmark(const std::vector<fs::path>& manifests, const EpisodeConfig& config,
                                   unsigned jobs = 1) {
  if (manifests.empty()) throw Error(ErrorKind::invalid_argument, "benchmark needs at least one manifest");
  MetricsReport report;
  report.options = config.metrics;
  report.sequences.resize(manifests.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < manifests.size(); i = next++) {
      report.sequences[i] = run_sequence(manifests[i], config);
    }
  };
  jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(manifests.size())));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return report;
}

namespace detail {

inline std::string tau_key(double tau) {
  std::ostringstream ss;
  ss << tau;
  return ss.str();
}

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline nlohmann::json r_at_json(const std::map<double, double>& r_at) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [tau, v] : r_at) j[tau_key(tau)] = v;
  return j;
}

}  // namespace detail

inline nlohmann::json object_metrics_to_json(const ObjectMetrics& m) {
  nlohmann::json j{{"id", m.id},
                   {"jf", detail::optional_number(m.jf)},
                   {"j", detail::optional_number(m.j)},
                   {"f", detail::optional_number(m.f)},
                   {"r_at", detail::r_at_json(m.r_at)},
                   {"noc", m.noc},
                   {"aci", m.aci},
                   {"spearman_rho", detail::optional_number(m.spearman_rho)}};
  if (m.idi_seconds) j["idi_seconds"] = *m.idi_seconds;
  return j;
}

/// Dataset-level aggregates over every object of every successful sequence:
/// R@tau and J/F/IDI are means over objects, NoC and ACI are sums.
inline nlohmann::json summarize(const MetricsReport& report) {
  std::vector<ObjectTrack> tracks;
  std::vector<const ObjectMetrics*> metrics;
  std::size_t failed = 0;
  bool fps_missing = false;
  for (const auto& s : report.sequences) {
    if (s.error) ++failed;
    if (s.error && s.objects.empty()) continue;
    if (!s.fps) fps_missing = true;
    for (const auto& t : s.tracks) {
      if (!t.empty()) tracks.push_back(t);
    }
    for (const auto& m : s.objects) metrics.push_back(&m);
  }
  nlohmann::json j;
  j["sequences"] = report.sequences.size();
  j["failed"] = failed;
  j["objects"] = metrics.size();
  auto mean_of = [&](auto get) -> nlohmann::json {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto* m : metrics) {
      if (const std::optional<double> v = get(*m)) {
        sum += *v;
        ++n;
      }
    }
    return n ? nlohmann::json(sum / static_cast<double>(n)) : nlohmann::json(nullptr);
  };
  j["jf"] = mean_of([](const ObjectMetrics& m) { return m.jf; });
  j["j"] = mean_of([](const ObjectMetrics& m) { return m.j; });
  j["f"] = mean_of([](const ObjectMetrics& m) { return m.f; });
  std::map<double, double> r_at;
  if (!tracks.empty()) {
    for (const double tau : report.options.r_at_taus) r_at[tau] = robustness_at(tracks, tau);
  }
  j["r_at"] = detail::r_at_json(r_at);
  std::size_t total_noc = 0;
  double total_aci = 0.0;
  for (const auto* m : metrics) {
    total_noc += m->noc;
    total_aci += m->aci;
  }
  j["noc"] = total_noc;
  j["aci"] = total_aci;
  j["idi_seconds"] = mean_of([](const ObjectMetrics& m) { return m.idi_seconds; });
  if (fps_missing) j["idi_note"] = "fps missing for some sequences; their objects are excluded from IDI";
  j["spearman_rho"] = mean_of([](const ObjectMetrics& m) { return m.spearman_rho; });
  return j;
}

inline nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  auto seqs = nlohmann::json::array();
  for (const auto& s : report.sequences) {
    nlohmann::json sj;
    sj["name"] = s.name;
    sj["manifest"] = s.manifest;
    if (s.error) sj["error"] = *s.error;
    if (!s.fps && !s.objects.empty()) sj["idi_omitted"] = "fps missing";
    auto objs = nlohmann::json::array();
    for (const auto& m : s.objects) objs.push_back(object_metrics_to_json(m));
    sj["objects"] = std::move(objs);
    seqs.push_back(std::move(sj));
  }
  j["sequences"] = std::move(seqs);
  j["summary"] = summarize(report);
  return j;
}

// --- proxy evaluation --------------------------------------------------------

struct ProxyRow {
  std::string sequence;
  ObjectId object = 0;
  int radius = 0;
  /// -spearman(S_R, IoU); empty when either series is constant.
  std::optional<double> rho;
};

/// Correlation between region entropy and IoU of the unassisted tracker,
/// for every object and dilation radius.
inline std::vector<ProxyRow> proxy_eval_sequence(const SequenceManifest& manifest, const std::vector<int>& radii) {
  auto tracker = make_tracker(manifest);
  const auto frame_count = std::min(manifest.frames.size(), tracker->frame_count());
  // [object][radius] -> series
  std::vector<std::vector<std::vector<double>>> s_r(
      manifest.objects.size(), std::vector<std::vector<double>>(radii.size()));
  std::vector<std::vector<double>> ious(manifest.objects.size());

  for (FrameIndex f = 0; f < static_cast<FrameIndex>(frame_count); ++f) {
    const auto step = tracker->step(f);
    const auto labels = argmax_labels(step.probability);
    const auto entropy = entropy_map(step.probability);
    const auto gt_labels = load_mask_pgm(manifest.resolve(manifest.frames[static_cast<std::size_t>(f)].gt));
    for (std::size_t k = 0; k < manifest.objects.size(); ++k) {
      const ObjectId id = manifest.objects[k];
      const auto pred = extract_object_mask(labels, id);
      const auto gt = extract_object_mask(gt_labels, id);
      for (std::size_t ri = 0; ri < radii.size(); ++ri) {
        s_r[k][ri].push_back(region_entropy(entropy, dilate_mask(pred, radii[ri])).value);
      }
      ious[k].push_back(iou(pred, gt));
      if (f == 0) {
        tracker->apply(id, MemoryDirective::store_refined, gt, f);
      } else {
        tracker->apply(id, MemoryDirective::store_original, std::nullopt, f);
      }
    }
  }

  std::vector<ProxyRow> rows;
  for (std::size_t k = 0; k < manifest.objects.size(); ++k) {
    for (std::size_t ri = 0; ri < radii.size(); ++ri) {
      ProxyRow row{manifest.name, manifest.objects[k], radii[ri], std::nullopt};
      try {
        row.rho = -spearman(s_r[k][ri], ious[k]);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::undefined_correlation && e.kind() != ErrorKind::invalid_argument) throw;
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

inline std::vector<ProxyRow> proxy_eval(const std::vector<SequenceManifest>& manifests, const std::vector<int>& radii) {
  std::vector<ProxyRow> rows;
  for (const auto& m : manifests) {
    auto part = proxy_eval_sequence(m, radii);
    rows.insert(rows.end(), part.begin(), part.end());
  }
  return rows;
}

inline std::string proxy_rows_to_csv(const std::vector<ProxyRow>& rows) {
  std::ostringstream out;
  out << "sequence,object,radius,rho\n";
  out.precision(10);
  for (const auto& r : rows) {
    out << r.sequence << ',' << r.object << ',' << r.radius << ',';
    if (r.rho) {
      out << *r.rho;
    } else {
      out << "undefined";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace zivos

#endif  // ZIVOS_HARNESS_HPP
