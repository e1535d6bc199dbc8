#ifndef ZIVOS_REFINER_HPP
#define ZIVOS_REFINER_HPP

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "zivos/core.hpp"
#include "zivos/detail/components.hpp"
#include "zivos/io.hpp"

namespace zivos {

/// What a refiner gets to see. The tracker's predicted mask is deliberately
/// absent: refinement works from the clicks (plus the probability map as
/// context for the desk-scale refiners).
struct RefinerRequest {
  FrameIndex frame = 0;
  ObjectId object = 1;
  std::vector<Click> clicks;
  ProbabilityMap probability;
  std::optional<BinaryMask> ground_truth;  // oracle mode only

  void validate() const {
    if (clicks.empty()) throw Error(ErrorKind::invalid_argument, "refiner request without clicks");
    for (const auto& c : clicks) {
      if (c.row < 0 || c.col < 0 || c.row >= probability.height() || c.col >= probability.width()) {
        throw Error(ErrorKind::invalid_argument, "click outside the frame");
      }
    }
  }
};

class Refiner {
 public:
  virtual ~Refiner() = default;
  virtual BinaryMask refine(const RefinerRequest& request) = 0;
  virtual std::string name() const = 0;
};

/// Upper bound: answers with the ground truth, whatever the clicks say.
class OracleRefiner final : public Refiner {
 public:
  BinaryMask refine(const RefinerRequest& request) override {
    request.validate();
    if (!request.ground_truth) {
      throw Error(ErrorKind::missing_ground_truth, "oracle refiner needs the ground truth");
    }
    return *request.ground_truth;
  }
  std::string name() const override { return "oracle"; }
};

/// Region growing on the clicked object's probability channel. Positive
/// clicks add their 4-connected component of {p >= threshold}; negative
/// clicks then remove the component of the result they land in.
class FloodRefiner final : public Refiner {
 public:
  explicit FloodRefiner(double threshold = 0.5) : threshold_(threshold) {
    if (!(threshold > 0.0 && threshold < 1.0)) {
      throw Error(ErrorKind::invalid_argument, "flood threshold must lie in (0,1)");
    }
  }

  BinaryMask refine(const RefinerRequest& request) override {
    request.validate();
    notes_.clear();
    const auto& prob = request.probability;
    if (request.object < 0 || request.object >= prob.classes()) {
      throw Error(ErrorKind::invalid_argument, "object id has no probability channel");
    }
    BinaryMask eligible(prob.height(), prob.width());
    for (int r = 0; r < prob.height(); ++r) {
      for (int c = 0; c < prob.width(); ++c) {
        eligible(r, c) = prob(r, c, request.object) >= threshold_ ? 1 : 0;
      }
    }
    BinaryMask out(prob.height(), prob.width());
    for (const auto& click : request.clicks) {
      if (click.polarity != Polarity::positive) continue;
      const auto comp = detail::flood_component(eligible, click.pixel());
      if (comp.empty()) {
        notes_.push_back("positive click at (" + std::to_string(click.row) + "," +
                         std::to_string(click.col) + ") below threshold");
      }
      for (const Pixel p : comp) out[p] = 1;
    }
    for (const auto& click : request.clicks) {
      if (click.polarity != Polarity::negative) continue;
      for (const Pixel p : detail::flood_component(out, click.pixel())) out[p] = 0;
    }
    return out;
  }

  std::string name() const override { return "flood"; }
  double threshold() const noexcept { return threshold_; }
  /// Non-fatal diagnostics from the most recent call.
  const std::vector<std::string>& notes() const noexcept { return notes_; }

 private:
  double threshold_;
  std::vector<std::string> notes_;
};

struct ExternalRefinerConfig {
  /// Shell command; `{req}` and `{resp}` are replaced by file paths.
  std::string command;
  fs::path exchange_dir;
  std::chrono::milliseconds timeout{30000};
};

namespace detail {

inline std::string replace_all(std::string s, const std::string& from, const std::string& to) {
  for (std::size_t pos = s.find(from); pos != std::string::npos; pos = s.find(from, pos + to.size())) {
    s.replace(pos, from.size(), to);
  }
  return s;
}

inline std::string shell_quote(const std::string& s) {
  return "'" + replace_all(s, "'", "'\\''") + "'";
}

/// Runs `/bin/sh -c command`, killing its process group on timeout.
/// Returns the exit status.
inline int run_with_timeout(const std::string& command, std::chrono::milliseconds timeout) {
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorKind::process_failure, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + timeout;
  int status = 0;
  while (true) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0) throw Error(ErrorKind::process_failure, "waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw Error(ErrorKind::timeout, "external refiner exceeded " +
                                          std::to_string(timeout.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(2));
  }
  if (WIFEXITED(status)) return WEXITSTATUS(status);
  return 128 + (WIFSIGNALED(status) ? WTERMSIG(status) : 0);
}

}  // namespace detail

/// Out-of-process refiner (e.g. a SAM-HQ wrapper script). One request at a
/// time: the probability map and a JSON request go into the exchange
/// directory, the command writes a PGM mask back.
class ExternalRefiner final : public Refiner {
 public:
  explicit ExternalRefiner(ExternalRefinerConfig config) : config_(std::move(config)) {
    if (config_.command.empty()) {
      throw Error(ErrorKind::invalid_argument, "external refiner command not configured");
    }
  }

  BinaryMask refine(const RefinerRequest& request) override {
    request.validate();
    fs::create_directories(config_.exchange_dir);
    const std::string stem = std::to_string(request.frame) + "_" + std::to_string(request.object);
    const fs::path prob_path = config_.exchange_dir / ("prob_" + stem + ".zivp");
    const fs::path req_path = config_.exchange_dir / ("req_" + stem + ".json");
    const fs::path resp_path = config_.exchange_dir / ("resp_" + stem + ".pgm");
    std::error_code ec;
    fs::remove(resp_path, ec);

    save_probability_map(request.probability, prob_path);
    nlohmann::json clicks = nlohmann::json::array();
    for (const auto& c : request.clicks) {
      clicks.push_back({{"row", c.row}, {"col", c.col}, {"polarity", to_string(c.polarity)}});
    }
    const nlohmann::json req{{"frame", request.frame},
                             {"object", request.object},
                             {"clicks", clicks},
                             {"prob", prob_path.string()}};
    detail::write_file(req_path, req.dump(2) + "\n");

    std::string cmd = detail::replace_all(config_.command, "{req}", detail::shell_quote(req_path.string()));
    cmd = detail::replace_all(cmd, "{resp}", detail::shell_quote(resp_path.string()));
    if (const int status = detail::run_with_timeout(cmd, config_.timeout); status != 0) {
      throw Error(ErrorKind::process_failure,
                  "external refiner exited with status " + std::to_string(status));
    }

    LabelMask labels;
    try {
      labels = load_mask_pgm(resp_path);
    } catch (const Error& e) {
      throw Error(ErrorKind::malformed_response, e.what());
    }
    if (labels.height() != request.probability.height() ||
        labels.width() != request.probability.width()) {
      throw Error(ErrorKind::malformed_response, "response mask has the wrong size");
    }
    BinaryMask out(labels.height(), labels.width());
    for (std::size_t i = 0; i < out.size(); ++i) out.values()[i] = labels.values()[i] ? 1 : 0;
    return out;
  }

  std::string name() const override { return "external"; }

 private:
  ExternalRefinerConfig config_;
};

}  // namespace zivos

#endif  // ZIVOS_REFINER_HPP
