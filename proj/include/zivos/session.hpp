#ifndef ZIVOS_SESSION_HPP
#define ZIVOS_SESSION_HPP

// Live annotation session: runs one episode with a human as the agent and
// exposes it over HTTP. The episode blocks whenever it asks for a click;
// there is no timeout, the tracker simply waits.
//
//   GET  /api/state                    -> {frame, status, object, s_r, delta, noc_so_far}
//   GET  /api/frame/{f}/image          -> PGM/PPM bytes
//   GET  /api/frame/{f}/entropy        -> ZIVP bytes, one channel
//   GET  /api/frame/{f}/mask/{object}  -> PGM, object pixels = object id
//   POST /api/click {row, col, polarity} -> 200; 409 unless awaiting_click,
//                                         400 for a malformed or out-of-frame click
//   POST /api/skip                     -> 200; a no-op unless awaiting_click
//   POST /api/step                     -> 200; starts the episode, then
//                                         advances one frame in manual-step mode

#include <condition_variable>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "zivos/harness.hpp"

namespace zivos {

enum class SessionStatus { awaiting_init, running, awaiting_click, done };

inline std::string to_string(SessionStatus s) {
  switch (s) {
    case SessionStatus::awaiting_init: return "awaiting_init";
    case SessionStatus::running: return "running";
    case SessionStatus::awaiting_click: return "awaiting_click";
    case SessionStatus::done: return "done";
  }
  return "unknown";
}

class LiveSession {
 public:
  LiveSession(SequenceManifest manifest, EpisodeConfig config, bool manual_step = false)
      : manifest_(std::move(manifest)), config_(std::move(config)), manual_step_(manual_step) {
    config_.agent = AgentMode::live;
    config_.normalize();
  }

  LiveSession(const LiveSession&) = delete;
  LiveSession& operator=(const LiveSession&) = delete;

  ~LiveSession() {
    {
      std::lock_guard lock(mutex_);
      shutdown_ = true;
    }
    cv_.notify_all();
    if (worker_.joinable()) worker_.join();
  }

  SessionStatus status() const {
    std::lock_guard lock(mutex_);
    return status_;
  }

  nlohmann::json state() const {
    std::lock_guard lock(mutex_);
    nlohmann::json j{{"frame", frame_},
                     {"status", to_string(status_)},
                     {"object", object_},
                     {"s_r", s_r_},
                     {"delta", delta_},
                     {"noc_so_far", noc_}};
    if (error_) j["error"] = *error_;
    if (status_ == SessionStatus::done && !summary_.is_null()) j["summary"] = summary_;
    return j;
  }

  /// Starts the episode, or releases one frame in manual-step mode.
  bool step() {
    std::lock_guard lock(mutex_);
    if (status_ == SessionStatus::awaiting_init) {
      status_ = SessionStatus::running;
      if (manual_step_) ++step_tokens_;
      worker_ = std::thread([this] { run(); });
      return true;
    }
    if (status_ == SessionStatus::done) return false;
    if (manual_step_) {
      ++step_tokens_;
      cv_.notify_all();
    }
    return true;
  }

  bool post_click(int row, int col, Polarity polarity) {
    std::lock_guard lock(mutex_);
    if (status_ != SessionStatus::awaiting_click || answer_) return false;
    Click c;
    c.row = row;
    c.col = col;
    c.polarity = polarity;
    answer_ = std::optional<Click>(c);
    cv_.notify_all();
    return true;
  }

  bool skip() {
    std::lock_guard lock(mutex_);
    if (status_ != SessionStatus::awaiting_click || answer_) return false;
    answer_ = std::optional<Click>();
    cv_.notify_all();
    return true;
  }

  std::optional<std::string> entropy_bytes(FrameIndex f) const {
    std::lock_guard lock(mutex_);
    const auto it = entropy_.find(f);
    if (it == entropy_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> mask_bytes(FrameIndex f, ObjectId object) const {
    std::lock_guard lock(mutex_);
    const auto it = masks_.find({f, object});
    if (it == masks_.end()) return std::nullopt;
    return it->second;
  }

  std::optional<std::string> image_bytes(FrameIndex f) const {
    if (f < 0 || static_cast<std::size_t>(f) >= manifest_.frames.size()) return std::nullopt;
    const auto& entry = manifest_.frames[static_cast<std::size_t>(f)];
    if (!entry.image) return std::nullopt;
    try {
      return detail::read_file(manifest_.resolve(*entry.image));
    } catch (const Error&) {
      return std::nullopt;
    }
  }

  /// Blocks until the episode has finished (for tests and scripted use).
  void wait_done() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return status_ == SessionStatus::done; });
  }

  void bind(httplib::Server& server) {
    server.Get("/api/state", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(state().dump(), "application/json");
    });
    server.Get(R"(/api/frame/(\d+)/image)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, image_bytes(std::stoll(req.matches[1])), "image/x-portable-anymap");
    });
    server.Get(R"(/api/frame/(\d+)/entropy)", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, entropy_bytes(std::stoll(req.matches[1])), "application/octet-stream");
    });
    server.Get(R"(/api/frame/(\d+)/mask/(\d+))", [this](const httplib::Request& req, httplib::Response& res) {
      send(res, mask_bytes(std::stoll(req.matches[1]), std::stoi(req.matches[2])),
           "image/x-portable-graymap");
    });
    server.Post("/api/click", [this](const httplib::Request& req, httplib::Response& res) {
      int row = 0;
      int col = 0;
      Polarity polarity = Polarity::positive;
      try {
        const auto j = nlohmann::json::parse(req.body);
        row = j.at("row").get<int>();
        col = j.at("col").get<int>();
        const auto p = j.value("polarity", std::string("positive"));
        if (p != "positive" && p != "negative") throw std::invalid_argument("polarity");
        polarity = p == "positive" ? Polarity::positive : Polarity::negative;
      } catch (const std::exception& e) {
        reply(res, 400, std::string("bad click: ") + e.what());
        return;
      }
      if (status() != SessionStatus::awaiting_click) {
        reply(res, 409, "not awaiting a click");
        return;
      }
      if (!in_bounds(row, col)) {
        reply(res, 400, "click outside the frame");
        return;
      }
      if (post_click(row, col, polarity)) {
        reply(res, 200, "accepted");
      } else {
        reply(res, 409, "not awaiting a click");
      }
    });
    server.Post("/api/skip", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, skip() ? "skipped" : "nothing to skip");
    });
    server.Post("/api/step", [this](const httplib::Request&, httplib::Response& res) {
      reply(res, 200, step() ? "ok" : "episode finished");
    });
  }

 private:
  static void send(httplib::Response& res, const std::optional<std::string>& bytes, const char* type) {
    if (!bytes) {
      reply(res, 404, "not available");
      return;
    }
    res.set_content(*bytes, type);
  }

  static void reply(httplib::Response& res, int status, const std::string& message) {
    res.status = status;
    res.set_content(nlohmann::json{{"status", status}, {"message", message}}.dump(), "application/json");
  }

  bool in_bounds(int row, int col) const {
    std::lock_guard lock(mutex_);
    return row >= 0 && col >= 0 && row < height_ && col < width_;
  }

  void run() {
    EpisodeHooks hooks;
    hooks.before_frame = [this](FrameIndex f) {
      std::unique_lock lock(mutex_);
      if (manual_step_) {
        cv_.wait(lock, [&] { return shutdown_ || step_tokens_ > 0; });
        if (step_tokens_ > 0) --step_tokens_;
      }
      if (shutdown_) throw Error(ErrorKind::process_failure, "session shut down");
      frame_ = f;
      status_ = SessionStatus::running;
    };
    hooks.live_click = [this](const UserPrompt& prompt) -> std::optional<Click> {
      std::unique_lock lock(mutex_);
      entropy_[prompt.frame] = encode_entropy(*prompt.entropy);
      masks_[{prompt.frame, prompt.object}] =
          encode_mask_pgm(to_label_mask(*prompt.prediction, static_cast<std::uint8_t>(prompt.object)));
      height_ = prompt.entropy->height();
      width_ = prompt.entropy->width();
      frame_ = prompt.frame;
      object_ = prompt.object;
      s_r_ = prompt.s_r;
      delta_ = prompt.delta;
      answer_.reset();
      status_ = SessionStatus::awaiting_click;
      cv_.notify_all();
      cv_.wait(lock, [&] { return shutdown_ || answer_.has_value(); });
      status_ = SessionStatus::running;
      if (shutdown_) return std::nullopt;
      auto click = *answer_;
      answer_.reset();
      if (click) ++noc_;
      return click;
    };
    hooks.after_frame = [this](const ProgressUpdate& p, const EntropyMap& entropy,
                               const std::map<ObjectId, BinaryMask>& masks) {
      std::lock_guard lock(mutex_);
      entropy_[p.frame] = encode_entropy(entropy);
      for (const auto& [id, m] : masks) {
        masks_[{p.frame, id}] = encode_mask_pgm(to_label_mask(m, static_cast<std::uint8_t>(id)));
      }
      height_ = entropy.height();
      width_ = entropy.width();
      if (p.object != 0) {
        object_ = p.object;
        s_r_ = p.s_r;
        delta_ = p.delta;
      }
      noc_ = p.noc_so_far;
    };

    EpisodeLog log;
    try {
      auto tracker = make_tracker(manifest_);
      auto refiner = make_refiner(config_, manifest_.name);
      log = run_episode(manifest_, *tracker, *refiner, config_, hooks);
    } catch (const std::exception& e) {
      log.error = e.what();
    }
    std::lock_guard lock(mutex_);
    if (log.error) error_ = log.error;
    if (!log.tracks.empty()) {
      MetricsReport report;
      report.options = config_.metrics;
      report.sequences.push_back(evaluate_episode(log, config_.metrics));
      summary_ = summarize(report);
    }
    status_ = SessionStatus::done;
    cv_.notify_all();
  }

  static std::string encode_entropy(const EntropyMap& e) {
    std::vector<float> v(e.values().begin(), e.values().end());
    return encode_zivp(e.height(), e.width(), 1, v);
  }

  SequenceManifest manifest_;
  EpisodeConfig config_;
  bool manual_step_;

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::thread worker_;
  SessionStatus status_ = SessionStatus::awaiting_init;
  FrameIndex frame_ = 0;
  ObjectId object_ = 0;
  double s_r_ = 0.0;
  double delta_ = 0.0;
  std::size_t noc_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::size_t step_tokens_ = 0;
  bool shutdown_ = false;
  std::optional<std::optional<Click>> answer_;
  std::optional<std::string> error_;
  nlohmann::json summary_;
  std::map<FrameIndex, std::string> entropy_;
  std::map<std::pair<FrameIndex, ObjectId>, std::string> masks_;
};

/// Serves a live session until the process is stopped.
inline void serve_session(const SequenceManifest& manifest, const EpisodeConfig& config, int port,
                          const std::optional<fs::path>& static_dir, bool manual_step = false) {
  LiveSession session(manifest, config, manual_step);
  httplib::Server server;
  session.bind(server);
  if (static_dir && !server.set_mount_point("/", static_dir->string())) {
    throw Error(ErrorKind::io, "static directory not found: " + static_dir->string());
  }
  if (!server.listen("0.0.0.0", port)) {
    throw Error(ErrorKind::io, "cannot listen on port " + std::to_string(port));
  }
}

}  // namespace zivos

#endif  // ZIVOS_SESSION_HPP
