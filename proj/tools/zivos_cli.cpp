#include <algorithm>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "zivos/session.hpp"
#include "zivos/zivos.hpp"

namespace fs = std::filesystem;

namespace {

zivos::EpisodeConfig load_config(const std::string& path) {
  if (path.empty()) return {};
  try {
    return zivos::config_from_json(nlohmann::json::parse(zivos::detail::read_file(path)));
  } catch (const nlohmann::json::exception& e) {
    throw zivos::Error(zivos::ErrorKind::format, "bad config " + path + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  zivos::detail::write_file(path, j.dump(2) + "\n");
}

std::vector<int> parse_radii(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const int r = std::stoi(item, &used);
      if (used != item.size() || r < 0) throw std::invalid_argument(item);
      out.push_back(r);
    } catch (const std::exception&) {
      throw zivos::Error(zivos::ErrorKind::invalid_argument, "bad radius '" + item + "'");
    }
  }
  if (out.empty()) throw zivos::Error(zivos::ErrorKind::invalid_argument, "no radii given");
  return out;
}

// Every *.json directly in `dir` plus every */manifest.json, sorted.
std::vector<fs::path> find_manifests(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw zivos::Error(zivos::ErrorKind::io, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json") out.push_back(e.path());
    if (e.is_directory() && fs::is_regular_file(e.path() / "manifest.json")) {
      out.push_back(e.path() / "manifest.json");
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"zivos: uncertainty-driven interactive video object segmentation"};
  app.require_subcommand(1);

  std::string manifest;
  std::string config_path;
  std::string agent = "simulated";
  std::string init = "gt";
  std::string out;
  std::string log_path;
  auto* run = app.add_subcommand("run", "run one sequence and write its metrics report");
  run->add_option("--manifest", manifest, "sequence manifest")->required();
  run->add_option("--config", config_path, "run configuration (JSON)");
  run->add_option("--agent", agent, "simulated | gt-centroid | none");
  run->add_option("--init", init, "gt | click");
  run->add_option("--out", out, "report path")->required();
  run->add_option("--log", log_path, "episode log path");

  std::string manifest_dir;
  unsigned jobs = 1;
  auto* bench = app.add_subcommand("bench", "run every manifest in a directory");
  bench->add_option("--manifest-dir", manifest_dir, "directory of manifests")->required();
  bench->add_option("--config", config_path, "run configuration (JSON)");
  bench->add_option("--out", out, "report path")->required();
  bench->add_option("--jobs", jobs, "parallel sequences")->check(CLI::PositiveNumber);

  std::string radii = "1,2,3,4,5";
  auto* proxy = app.add_subcommand("proxy-eval", "correlate region entropy with IoU per dilation radius");
  proxy->add_option("--manifest", manifest, "sequence manifest")->required();
  proxy->add_option("--radii", radii, "comma-separated dilation radii");
  proxy->add_option("--out", out, "CSV path")->required();

  std::string scenario = "distractor";
  int frames = 80;
  std::uint64_t seed = 42;
  auto* synth = app.add_subcommand("synth", "generate a synthetic sequence");
  synth->add_option("--scenario", scenario, "drift | distractor | occlusion");
  synth->add_option("--frames", frames, "frame count")->check(CLI::PositiveNumber);
  synth->add_option("--seed", seed, "random seed");
  synth->add_option("--out", out, "output directory")->required();

  int port = 8080;
  std::string static_dir;
  bool manual_step = false;
  auto* serve = app.add_subcommand("serve", "serve a live annotation session over HTTP");
  serve->add_option("--manifest", manifest, "sequence manifest")->required();
  serve->add_option("--config", config_path, "run configuration (JSON)");
  serve->add_option("--port", port, "TCP port");
  serve->add_option("--static", static_dir, "UI build directory");
  serve->add_flag("--manual-step", manual_step, "advance one frame per POST /api/step");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto config = load_config(config_path);
      config.agent = zivos::agent_from_string(agent);
      config.init = zivos::init_from_string(init);
      const auto m = zivos::load_manifest(manifest);
      auto tracker = zivos::make_tracker(m);
      auto refiner = zivos::make_refiner(config, m.name);
      const auto log = zivos::run_episode(m, *tracker, *refiner, config);
      zivos::MetricsReport report;
      report.options = config.metrics;
      auto result = zivos::evaluate_episode(log, config.metrics);
      result.manifest = fs::path(manifest).generic_string();
      report.sequences.push_back(std::move(result));
      write_json(out, zivos::report_to_json(report));
      if (!log_path.empty()) write_json(log_path, zivos::episode_log_to_json(log));
      if (log.error) {
        std::cerr << "episode stopped: " << *log.error << "\n";
        return 1;
      }
      std::cout << zivos::summarize(report).dump(2) << "\n";
    } else if (bench->parsed()) {
      const auto config = load_config(config_path);
      const auto paths = find_manifests(manifest_dir);
      const auto report = zivos::run_benchmark(paths, config, jobs);
      write_json(out, zivos::report_to_json(report));
      std::size_t failed = 0;
      for (const auto& s : report.sequences) {
        if (s.error) {
          ++failed;
          std::cerr << s.manifest << ": " << *s.error << "\n";
        }
      }
      std::cout << zivos::summarize(report).dump(2) << "\n";
      if (failed == report.sequences.size()) return 1;
    } else if (proxy->parsed()) {
      const auto m = zivos::load_manifest(manifest);
      const auto rows = zivos::proxy_eval_sequence(m, parse_radii(radii));
      const fs::path out_path(out);
      if (out_path.has_parent_path()) fs::create_directories(out_path.parent_path());
      zivos::detail::write_file(out_path, zivos::proxy_rows_to_csv(rows));
    } else if (synth->parsed()) {
      const auto s = zivos::default_scenario(zivos::scenario_kind_from_string(scenario), frames, seed);
      const auto m = zivos::synth_generate(s, out);
      std::cout << (fs::path(out) / "manifest.json").string() << " (" << m.frames.size() << " frames)\n";
    } else if (serve->parsed()) {
      const auto config = load_config(config_path);
      const auto m = zivos::load_manifest(manifest);
      std::optional<fs::path> dir;
      if (!static_dir.empty()) dir = static_dir;
      std::cout << "serving " << m.name << " on port " << port << "\n";
      zivos::serve_session(m, config, port, dir, manual_step);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
