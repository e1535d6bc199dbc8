#include <gtest/gtest.h>

#include "support.hpp"

using namespace zivos;
using namespace zivos::testing;

namespace {

constexpr int kH = 12;
constexpr int kW = 12;

BinaryMask object_block() { return block(kH, kW, 3, 3, 7, 7); }

/// Confident frames everywhere except `spike`, where the whole frame reads
/// object with probability `p`.
fs::path spike_replay(const fs::path& dir, int frames, int spike, float p) {
  std::vector<ProbabilityMap> maps;
  std::vector<BinaryMask> gts;
  for (int f = 0; f < frames; ++f) {
    if (f == spike) {
      maps.push_back(two_class_map(block(kH, kW, 0, 0, kH - 1, kW - 1), p, p));
    } else {
      maps.push_back(two_class_map(object_block(), 1.0f, 0.0f));
    }
    gts.push_back(object_block());
  }
  return write_replay(dir, "spike", maps, gts);
}

EpisodeLog run(const fs::path& manifest_path, const EpisodeConfig& config) {
  const auto m = load_manifest(manifest_path);
  auto tracker = make_tracker(m);
  auto refiner = make_refiner(config, m.name);
  return run_episode(m, *tracker, *refiner, config);
}

void expect_one_click_per_object_frame(const EpisodeLog& log) {
  for (const auto& f : log.frames) {
    for (const auto& o : f.objects) {
      int clicks = 0;
      for (const auto& e : f.events) {
        const auto type = e.at("type").get<std::string>();
        if (e.at("object") == o.object && (type == "user_click" || type == "pseudo_click")) ++clicks;
      }
      EXPECT_LE(clicks, 1) << "frame " << f.frame;
    }
  }
}

}  // namespace

TEST(Episode, SpikeAtFrameSevenGetsExactlyOneUserClick) {
  TempDir dir("spike");
  const auto path = spike_replay(dir.path(), 12, 7, 0.853f);
  const auto log = run(path, EpisodeConfig{});
  ASSERT_FALSE(log.error) << *log.error;
  ASSERT_EQ(log.frames.size(), 12u);
  const double expected_sr = normalized_entropy(std::vector<float>{1.0f - 0.853f, 0.853f});
  EXPECT_NEAR(log.frames[7].objects[0].s_r.value, expected_sr, 1e-9);
  EXPECT_NEAR(log.frames[7].objects[0].delta, expected_sr, 1e-9);
  EXPECT_GE(log.frames[7].objects[0].delta, 0.5);
  EXPECT_EQ(log.click_count(), 1u);
  for (const auto& f : log.frames) {
    const auto& o = f.objects[0];
    if (f.frame == 7) {
      EXPECT_EQ(o.decision, InteractionDecision::request_user);
      ASSERT_TRUE(o.click.has_value());
      EXPECT_EQ(o.click->origin, ClickOrigin::user);
      EXPECT_EQ(o.directive, MemoryDirective::store_refined);
      // oracle refiner on a user-corrected frame
      EXPECT_EQ(log.tracks[0][7].iou, 1.0);
      EXPECT_TRUE(log.tracks[0][7].user_prompted);
    } else {
      EXPECT_EQ(o.decision, InteractionDecision::none) << f.frame;
    }
  }
  expect_one_click_per_object_frame(log);
}

TEST(Episode, ConfidentReplayHasNoInteractionsAndNoSkips) {
  TempDir dir("confident");
  const auto path = spike_replay(dir.path(), 10, -1, 0.5f);
  const auto m = load_manifest(path);
  ReplayTracker tracker(m);
  OracleRefiner refiner;
  const auto log = run_episode(m, tracker, refiner, EpisodeConfig{});
  ASSERT_FALSE(log.error);
  EXPECT_EQ(log.click_count(), 0u);
  EXPECT_EQ(tracker.directive_count(MemoryDirective::skip), 0u);
  EXPECT_EQ(tracker.directive_count(MemoryDirective::store_refined), 1u);  // initialisation
  EXPECT_EQ(tracker.directive_count(MemoryDirective::store_original), 9u);
}

TEST(Episode, PolicyOffMatchesTheRawTracker) {
  for (const auto kind : {ScenarioKind::drift, ScenarioKind::distractor, ScenarioKind::occlusion}) {
    TempDir dir("baseline");
    const auto m = synth_generate(default_scenario(kind, 30, 42), dir.path());
    EpisodeConfig config;
    config.policy = PolicyConfig::all_off();
    const auto log = run(dir.path() / "manifest.json", config);
    ASSERT_FALSE(log.error);
    EXPECT_EQ(log.click_count(), 0u);
    for (std::size_t f = 0; f < log.frames.size(); ++f) {
      const auto& o = log.frames[f].objects[0];
      EXPECT_EQ(o.decision, InteractionDecision::none);
      if (f > 0) {
        EXPECT_EQ(o.directive, MemoryDirective::store_original);
        // the exported files are the undisturbed tracker output
        const auto raw = extract_object_mask(argmax_labels(load_probability_map(m.resolve(m.frames[f].prob))), 1);
        EXPECT_EQ(log.tracks[0][f].pred, raw) << to_string(kind) << " frame " << f;
      }
    }
  }
}

TEST(Episode, AgentNoneNeverClicksAsUser) {
  TempDir dir("none");
  const auto path = spike_replay(dir.path(), 10, 4, 0.853f);
  EpisodeConfig config;
  config.agent = AgentMode::none;
  const auto log = run(path, config);
  EXPECT_EQ(log.click_count(), 0u);
  EXPECT_EQ(log.frames[4].objects[0].decision, InteractionDecision::none);
}

TEST(Episode, SatisfiedUserIsLoggedWithoutAClick) {
  TempDir dir("satisfied");
  // the spike frame predicts exactly the ground truth
  std::vector<ProbabilityMap> maps;
  std::vector<BinaryMask> gts;
  for (int f = 0; f < 5; ++f) {
    maps.push_back(f == 2 ? two_class_map(object_block(), 0.9f, 0.4f) : two_class_map(object_block(), 1.0f, 0.0f));
    gts.push_back(object_block());
  }
  const auto log = run(write_replay(dir.path(), "s", maps, gts), EpisodeConfig{});
  ASSERT_EQ(log.frames[2].objects[0].decision, InteractionDecision::request_user);
  EXPECT_EQ(log.click_count(), 0u);
  EXPECT_EQ(log.frames[2].events.at(0).at("type"), "user_satisfied");
  EXPECT_EQ(noc(log.tracks[0]), 0u);
}

TEST(Episode, GtCentroidAgentClicksInsideTheObject) {
  TempDir dir("centroid");
  const auto path = spike_replay(dir.path(), 10, 5, 0.853f);
  EpisodeConfig config;
  config.agent = AgentMode::simulated_gt_centroid;
  const auto log = run(path, config);
  ASSERT_TRUE(log.frames[5].objects[0].click.has_value());
  EXPECT_EQ(log.frames[5].objects[0].click->pixel(), (Pixel{5, 5}));
}

TEST(Episode, InitClickSeedsWithTheRefiner) {
  TempDir dir("initclick");
  synth_generate(default_scenario(ScenarioKind::drift, 10, 1), dir.path());
  EpisodeConfig config;
  config.init = InitMode::init_click;
  const auto log = run(dir.path() / "manifest.json", config);
  ASSERT_FALSE(log.error);
  EXPECT_EQ(log.frames[0].events.at(0).at("type"), "init_click");
  EXPECT_EQ(log.frames[0].events.at(0).at("click").at("origin"), "init");
  EXPECT_EQ(noc(log.tracks[0]), 0u);
}

TEST(Episode, DistractorDefaultsUseBothCorrectionKinds) {
  TempDir dir("distractor");
  synth_generate(default_scenario(ScenarioKind::distractor, 80, 42), dir.path());
  const auto log = run(dir.path() / "manifest.json", EpisodeConfig{});
  ASSERT_FALSE(log.error);
  std::size_t user = 0;
  std::size_t pseudo = 0;
  for (const auto& f : log.frames) {
    for (const auto& o : f.objects) {
      if (o.click && o.click->origin == ClickOrigin::user) ++user;
      if (o.click && o.click->origin == ClickOrigin::pseudo) ++pseudo;
    }
  }
  EXPECT_GE(user, 1u);
  EXPECT_GE(pseudo, 1u);
  expect_one_click_per_object_frame(log);
}

TEST(Episode, TrackerFailureKeepsThePartialLog) {
  TempDir dir("partial");
  const auto path = spike_replay(dir.path(), 6, -1, 0.5f);
  fs::remove(dir.path() / "prob_4.zivp");
  const auto log = run(path, EpisodeConfig{});
  ASSERT_TRUE(log.error.has_value());
  EXPECT_EQ(log.frames.size(), 4u);
  EXPECT_EQ(log.tracks[0].size(), 4u);
}

TEST(Episode, ExternalRefinerFailureStopsTheEpisode) {
  TempDir dir("extfail");
  const auto path = spike_replay(dir.path(), 6, 3, 0.853f);
  EpisodeConfig config;
  config.refiner = RefinerKind::external;
  config.external.command = "false";
  config.external.exchange_dir = dir.path() / "x";
  const auto log = run(path, config);
  ASSERT_TRUE(log.error.has_value());
  EXPECT_NE(log.error->find("process_failure"), std::string::npos);
  EXPECT_EQ(log.frames.size(), 3u);
}

TEST(Conflicts, HigherProbabilityWinsThenLowerId) {
  std::vector<float> v;
  // pixel 0: object 1 more likely; pixel 1: object 2 more likely; pixel 2: tie
  for (const auto& px : std::vector<std::array<float, 3>>{{0.0f, 0.6f, 0.4f}, {0.0f, 0.3f, 0.7f}, {0.0f, 0.5f, 0.5f}}) {
    v.insert(v.end(), px.begin(), px.end());
  }
  const ProbabilityMap prob(1, 3, 3, v);
  std::map<ObjectId, BinaryMask> refined{{1, block(1, 3, 0, 0, 0, 2)}, {2, block(1, 3, 0, 0, 0, 2)}};
  detail::resolve_conflicts(refined, prob);
  EXPECT_EQ(refined[1], (BinaryMask(1, 3, std::vector<std::uint8_t>{1, 0, 1})));
  EXPECT_EQ(refined[2], (BinaryMask(1, 3, std::vector<std::uint8_t>{0, 1, 0})));
}

TEST(Config, ReadsAllKeys) {
  const auto c = config_from_json(nlohmann::json::parse(R"({
    "tau_u": 0.6, "refiner": "flood", "flood_threshold": 0.4, "agent": "gt-centroid",
    "init": "click", "series_source": "final", "r_at_taus": [0.5], "boundary_tolerance": 2,
    "aci_include_boundaries": true, "external_timeout_s": 1.5})"));
  EXPECT_EQ(c.policy.tau_u, 0.6);
  EXPECT_EQ(c.refiner, RefinerKind::flood);
  EXPECT_EQ(c.flood_threshold, 0.4);
  EXPECT_EQ(c.agent, AgentMode::simulated_gt_centroid);
  EXPECT_EQ(c.init, InitMode::init_click);
  EXPECT_EQ(c.series_source, SeriesSource::final);
  EXPECT_EQ(c.metrics.r_at_taus, std::vector<double>{0.5});
  EXPECT_EQ(*c.metrics.boundary_tolerance, 2.0);
  EXPECT_TRUE(c.metrics.aci_include_boundaries);
  EXPECT_EQ(c.external.timeout, std::chrono::milliseconds(1500));
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"refiner":"magic"})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"agent":"robot"})")), Error);
  EXPECT_THROW(config_from_json(nlohmann::json::parse(R"({"series_source":"both"})")), Error);
}

TEST(Benchmark, FailingSequenceIsRecordedAndOthersStillRun) {
  TempDir dir("bench");
  const auto good = spike_replay(dir.path() / "good", 8, 4, 0.853f);
  const auto report = run_benchmark({good, dir.path() / "missing" / "manifest.json"}, EpisodeConfig{}, 2);
  ASSERT_EQ(report.sequences.size(), 2u);
  EXPECT_FALSE(report.sequences[0].error);
  EXPECT_EQ(report.sequences[0].objects.size(), 1u);
  EXPECT_TRUE(report.sequences[1].error);
  const auto j = report_to_json(report);
  EXPECT_EQ(j.at("summary").at("failed"), 1);
  EXPECT_TRUE(j.at("sequences").at(1).contains("error"));
  const auto& obj = j.at("sequences").at(0).at("objects").at(0);
  for (const char* key : {"id", "jf", "j", "f", "r_at", "noc", "idi_seconds", "aci", "spearman_rho"}) {
    EXPECT_TRUE(obj.contains(key)) << key;
  }
  EXPECT_TRUE(obj.at("r_at").contains("0.1"));
  EXPECT_TRUE(obj.at("r_at").contains("0.25"));
  EXPECT_TRUE(obj.at("r_at").contains("0.5"));
}

TEST(Benchmark, MissingFpsOmitsIdi) {
  TempDir dir("nofps");
  std::vector<ProbabilityMap> maps(4, two_class_map(object_block(), 1.0f, 0.0f));
  std::vector<BinaryMask> gts(4, object_block());
  const auto path = write_replay(dir.path(), "nofps", maps, gts, std::nullopt);
  const auto j = report_to_json(run_benchmark({path}, EpisodeConfig{}));
  EXPECT_FALSE(j.at("sequences").at(0).at("objects").at(0).contains("idi_seconds"));
  EXPECT_EQ(j.at("sequences").at(0).at("idi_omitted"), "fps missing");
}

TEST(Benchmark, IdenticalInputsGiveIdenticalReports) {
  TempDir dir("det");
  synth_generate(default_scenario(ScenarioKind::distractor, 30, 42), dir.path() / "a");
  synth_generate(default_scenario(ScenarioKind::drift, 30, 42), dir.path() / "b");
  const std::vector<fs::path> paths{dir.path() / "a" / "manifest.json", dir.path() / "b" / "manifest.json"};
  const auto first = report_to_json(run_benchmark(paths, EpisodeConfig{}, 1)).dump(2);
  const auto second = report_to_json(run_benchmark(paths, EpisodeConfig{}, 2)).dump(2);
  EXPECT_EQ(first, second);
}

TEST(Proxy, PerfectReplayIsUndefined) {
  TempDir dir("perfect");
  std::vector<ProbabilityMap> maps(6, two_class_map(object_block(), 1.0f, 0.0f));
  std::vector<BinaryMask> gts(6, object_block());
  const auto m = load_manifest(write_replay(dir.path(), "perfect", maps, gts));
  const auto rows = proxy_eval_sequence(m, {1, 2, 3, 4, 5});
  ASSERT_EQ(rows.size(), 5u);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].radius, static_cast<int>(i) + 1);
    EXPECT_FALSE(rows[i].rho.has_value());
  }
  const auto csv = proxy_rows_to_csv(rows);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sequence,object,radius,rho");
  EXPECT_NE(csv.find("perfect,1,2,undefined"), std::string::npos);
}

TEST(Proxy, DriftCorrelatesEntropyWithError) {
  TempDir dir("drift");
  const auto m = synth_generate(default_scenario(ScenarioKind::drift, 80, 42), dir.path());
  for (const auto& row : proxy_eval_sequence(m, {1, 2, 3, 4, 5})) {
    ASSERT_TRUE(row.rho.has_value());
    EXPECT_GT(*row.rho, 0.9) << "radius " << row.radius;
  }
}

TEST(EpisodeLogJson, CarriesEventsAndDecisions) {
  TempDir dir("logjson");
  const auto log = run(spike_replay(dir.path(), 9, 6, 0.853f), EpisodeConfig{});
  const auto j = episode_log_to_json(log);
  ASSERT_EQ(j.at("frames").size(), 9u);
  const auto& f6 = j.at("frames").at(6);
  EXPECT_EQ(f6.at("objects").at(0).at("decision"), "request_user");
  EXPECT_EQ(f6.at("objects").at(0).at("directive"), "store_refined");
  EXPECT_EQ(f6.at("events").at(0).at("type"), "user_click");
  EXPECT_TRUE(j.at("frames").at(5).at("objects").at(0).at("click").is_null());
}
