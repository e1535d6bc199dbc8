#ifndef ZIVOS_POLICY_HPP
#define ZIVOS_POLICY_HPP

#include <string>
#include <vector>

#include <json.hpp>

#include "zivos/core.hpp"
#include "zivos/uncertainty.hpp"

namespace zivos {

/// Which quantity is compared against the interaction thresholds.
enum class TriggerSource { delta, value };

struct PolicyConfig {
  double tau_u = 0.5;
  double tau_p = 0.2;
  double tau_m = 0.8;
  int dilation_radius = kDefaultDilationRadius;
  bool enable_user = true;
  bool enable_pseudo = true;
  bool enable_udu = true;
  bool enable_user_idu = true;
  bool enable_pseudo_idu = false;
  TriggerSource trigger_on = TriggerSource::delta;

  void validate() const {
    if (!(tau_u > tau_p)) throw Error(ErrorKind::invalid_argument, "tau_u must exceed tau_p");
    if (!(tau_m >= 0.0 && tau_m <= 1.0)) {
      throw Error(ErrorKind::invalid_argument, "tau_m must lie in [0,1]");
    }
    if (dilation_radius < 0) throw Error(ErrorKind::invalid_argument, "dilation_radius < 0");
  }

  /// Baseline tracker: no interactions, every prediction stored.
  static PolicyConfig all_off() {
    PolicyConfig c;
    c.enable_user = c.enable_pseudo = c.enable_udu = c.enable_user_idu = c.enable_pseudo_idu = false;
    return c;
  }
};

/// Omitted keys keep their defaults.
inline PolicyConfig policy_from_json(const nlohmann::json& j) {
  PolicyConfig c;
  try {
    c.tau_u = j.value("tau_u", c.tau_u);
    c.tau_p = j.value("tau_p", c.tau_p);
    c.tau_m = j.value("tau_m", c.tau_m);
    c.dilation_radius = j.value("dilation_radius", c.dilation_radius);
    c.enable_user = j.value("enable_user", c.enable_user);
    c.enable_pseudo = j.value("enable_pseudo", c.enable_pseudo);
    c.enable_udu = j.value("enable_udu", c.enable_udu);
    c.enable_user_idu = j.value("enable_user_idu", c.enable_user_idu);
    c.enable_pseudo_idu = j.value("enable_pseudo_idu", c.enable_pseudo_idu);
    const auto trigger = j.value("trigger_on", std::string("delta"));
    if (trigger == "delta") {
      c.trigger_on = TriggerSource::delta;
    } else if (trigger == "value") {
      c.trigger_on = TriggerSource::value;
    } else {
      throw Error(ErrorKind::invalid_argument, "trigger_on must be 'delta' or 'value'");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::format, std::string("bad policy config: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json to_json(const PolicyConfig& c) {
  return {{"tau_u", c.tau_u},
          {"tau_p", c.tau_p},
          {"tau_m", c.tau_m},
          {"dilation_radius", c.dilation_radius},
          {"enable_user", c.enable_user},
          {"enable_pseudo", c.enable_pseudo},
          {"enable_udu", c.enable_udu},
          {"enable_user_idu", c.enable_user_idu},
          {"enable_pseudo_idu", c.enable_pseudo_idu},
          {"trigger_on", c.trigger_on == TriggerSource::delta ? "delta" : "value"}};
}

enum class InteractionDecision { none, pseudo, request_user };
enum class MemoryDirective { store_original, skip, store_refined };

inline std::string to_string(InteractionDecision d) {
  switch (d) {
    case InteractionDecision::none: return "none";
    case InteractionDecision::pseudo: return "pseudo";
    case InteractionDecision::request_user: return "request_user";
  }
  return "unknown";
}

inline std::string to_string(MemoryDirective d) {
  switch (d) {
    case MemoryDirective::store_original: return "store_original";
    case MemoryDirective::skip: return "skip";
    case MemoryDirective::store_refined: return "store_refined";
  }
  return "unknown";
}

/// Per-object record of region entropy over time.
class UncertaintySeries {
 public:
  struct Sample {
    FrameIndex frame;
    double value;
    bool absent;
  };

  /// Appends and returns S(f) - S(previous); 0 for the first sample.
  double push_and_delta(FrameIndex frame, const RegionEntropy& s) {
    const double delta = delta_for(frame, s.value);
    samples_.push_back({frame, s.value, s.absent});
    if (samples_.size() > 1) deltas_.push_back(delta);
    return delta;
  }

  /// Delta the next push would report, without recording anything.
  double delta_for(FrameIndex frame, double value) const {
    if (!samples_.empty() && frame <= samples_.back().frame) {
      throw Error(ErrorKind::out_of_order, "frame " + std::to_string(frame) +
                                               " does not follow " +
                                               std::to_string(samples_.back().frame));
    }
    return samples_.empty() ? 0.0 : value - samples_.back().value;
  }

  const std::vector<Sample>& samples() const noexcept { return samples_; }
  const std::vector<double>& deltas() const noexcept { return deltas_; }

 private:
  std::vector<Sample> samples_;
  std::vector<double> deltas_;
};

inline InteractionDecision decide_interaction(double signal, const PolicyConfig& config) {
  if (config.enable_user && signal >= config.tau_u) return InteractionDecision::request_user;
  if (config.enable_pseudo && signal < config.tau_u && signal >= config.tau_p) {
    return InteractionDecision::pseudo;
  }
  return InteractionDecision::none;
}

// Precedence: interaction-driven update, then uncertainty-driven skip, then
// the default store.
inline MemoryDirective memory_gate(const RegionEntropy& s, bool user_corrected,
                                   const PolicyConfig& config, bool pseudo_corrected) {
  if (user_corrected && config.enable_user_idu) return MemoryDirective::store_refined;
  if (pseudo_corrected && config.enable_pseudo_idu) return MemoryDirective::store_refined;
  if (config.enable_udu && s.value > config.tau_m) return MemoryDirective::skip;
  return MemoryDirective::store_original;
}

}  // namespace zivos

#endif  // ZIVOS_POLICY_HPP
