#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "coopalign/common/error.hpp"
#include "coopalign/detection/box.hpp"
#include "coopalign/harness/benchmark.hpp"
#include "coopalign/harness/config.hpp"
#include "coopalign/harness/parallel.hpp"
#include "coopalign/harness/pipeline.hpp"
#include "coopalign/harness/scenario.hpp"
#include "coopalign/pgc/ransac.hpp"

namespace coopalign::harness {
namespace {

TEST(Scenario, ZeroCoVisibleGivesDisjointVisibility) {
  ScenarioConfig cfg;
  cfg.co_visible = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto s = generate_scenario(cfg, seed);
    ASSERT_EQ(s.agents.size(), 2u);
    const std::set<std::size_t> a(s.agents[0].visible.begin(), s.agents[0].visible.end());
    for (std::size_t v : s.agents[1].visible) EXPECT_EQ(a.count(v), 0u) << "seed " << seed;
    // Ranges: every object lies within range of exactly one agent.
    for (const auto& o : s.world_objects) {
      int n = 0;
      for (const auto& ag : s.agents) n += std::hypot(o.x - ag.gt_pose.translation.x(), o.y - ag.gt_pose.translation.y()) <= cfg.sensing_range;
      EXPECT_EQ(n, 1);
    }
  }
}

TEST(Scenario, CoVisibleCountIsHonoured) {
  ScenarioConfig cfg;
  cfg.co_visible = 5;
  const auto s = generate_scenario(cfg, 3);
  int shared = 0;
  for (const auto& o : s.world_objects) {
    bool all = true;
    for (const auto& ag : s.agents) {
      all = all && std::hypot(o.x - ag.gt_pose.translation.x(), o.y - ag.gt_pose.translation.y()) <= cfg.sensing_range;
    }
    shared += all ? 1 : 0;
  }
  EXPECT_EQ(shared, 5);
}

TEST(Scenario, DeterministicInSeed) {
  ScenarioConfig cfg;
  const auto a = generate_scenario(cfg, 77), b = generate_scenario(cfg, 77), c = generate_scenario(cfg, 78);
  ASSERT_EQ(a.agents.size(), b.agents.size());
  for (std::size_t i = 0; i < a.agents.size(); ++i) {
    EXPECT_EQ(a.agents[i].frames[0].points, b.agents[i].frames[0].points);
    EXPECT_EQ(a.agents[i].visible, b.agents[i].visible);
  }
  EXPECT_NE(a.agents[0].frames[0].points, c.agents[0].frames[0].points);
}

TEST(Scenario, PointsStayWithinSensingRange) {
  ScenarioConfig cfg;
  cfg.sensing_range = 60.0;
  cfg.agent_separation = 30.0;
  cfg.frames = 2;
  const auto s = generate_scenario(cfg, 5);
  for (const auto& ag : s.agents) {
    ASSERT_EQ(ag.frames.size(), 2u);
    for (const auto& f : ag.frames) {
      ASSERT_FALSE(f.points.empty());
      for (const auto& p : f.points) EXPECT_LE(p.head<2>().norm(), 60.0 + 1e-9);
    }
  }
}

TEST(Scenario, RejectsInvalidConfig) {
  ScenarioConfig cfg;
  cfg.sensing_range = 0.0;
  EXPECT_THROW(generate_scenario(cfg, 1), ConfigError);
  ScenarioConfig crowded;
  crowded.num_objects = 400;
  crowded.max_retries = 20;
  EXPECT_THROW(generate_scenario(crowded, 1), InfeasibleScenario);
}

TEST(Pipeline, SingleAgentWeightIsOne) {
  ScenarioConfig sc;
  sc.num_agents = 1;
  const auto s = generate_scenario(sc, 11);
  PipelineConfig cfg;
  PipelineOptions with, without;
  without.confidence_embedding = false;
  const auto a = run_pipeline(s, cfg, with);
  const auto b = run_pipeline(s, cfg, without);
  ASSERT_TRUE(a.estimates[0].has_value());
  EXPECT_LT(a.estimates[0]->confidence, 1.0);
  // A lone agent's normalized weight is 1 whatever its confidence.
  EXPECT_EQ(a.encoded.values, b.encoded.values);
  EXPECT_TRUE(a.neighbors.empty());
  EXPECT_EQ(a.ledger.records().size(), 0u);
}

TEST(Pipeline, ExactPosesLeaveFsaWithinOneStep) {
  ScenarioConfig sc;
  sc.co_visible = 6;
  PipelineConfig cfg;
  PipelineOptions opts;
  opts.pose_source = PoseSource::kGroundTruth;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto r = run_pipeline(generate_scenario(sc, seed), cfg, opts);
    ASSERT_EQ(r.neighbors.size(), 1u);
    const auto& n = r.neighbors[0];
    EXPECT_TRUE(n.included);
    EXPECT_EQ(n.confidence, 1.0);
    if (!n.fsa_applied) continue;
    EXPECT_LE(std::abs(n.fsa_offset.dx), cfg.fsa.step_xy + 1e-12) << "seed " << seed;
    EXPECT_LE(std::abs(n.fsa_offset.dy), cfg.fsa.step_xy + 1e-12) << "seed " << seed;
    EXPECT_LE(std::abs(n.fsa_offset.dtheta), cfg.fsa.step_theta + 1e-12) << "seed " << seed;
  }
}

TEST(Pipeline, LedgerRecordsEveryExchange) {
  ScenarioConfig sc;
  sc.num_agents = 3;
  sc.frames = 2;
  const auto s = generate_scenario(sc, 21);
  PipelineOptions opts;
  opts.pose_source = PoseSource::kGroundTruth;
  const auto r = run_pipeline(s, PipelineConfig{}, opts);
  EXPECT_EQ(r.ledger.count_of(MessageKind::kPose), 4u);
  EXPECT_EQ(r.ledger.count_of(MessageKind::kFeatures), 4u);
  EXPECT_EQ(r.ledger.count_of(MessageKind::kBoxes), 0u);
  EXPECT_EQ(r.ledger.total_bytes(), r.ledger.bytes_of(MessageKind::kPose) + r.ledger.bytes_of(MessageKind::kFeatures));
  for (const auto& m : r.ledger.records()) {
    EXPECT_EQ(m.receiver, 0);
    EXPECT_GE(m.sender, 1);
    if (m.kind == MessageKind::kFeatures) EXPECT_EQ(m.bytes, fusion::kBevGridHeaderBytes + 4 * 3 * PipelineConfig{}.grid.cells());
  }
  const std::string csv = r.ledger.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "sender,receiver,kind,frame,bytes");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 9);
  EXPECT_EQ(r.ego_localized, (std::vector<bool>{true, true}));
}

TEST(Pipeline, PoseMessageIsSmallerThanBoxMessage) {
  ScenarioConfig sc;
  sc.co_visible = 4;
  PipelineOptions opts;
  const auto s = generate_scenario(sc, 8);
  const auto r = run_pipeline(s, PipelineConfig{}, opts);
  ASSERT_GE(s.agents[1].boxes.size(), 4u);
  EXPECT_LT(r.ledger.bytes_of(MessageKind::kPose), detection::encode_boxes_json(s.agents[1].boxes).size());
}

TEST(Config, StrictParsing) {
  EXPECT_NO_THROW(parse_config("{}"));
  EXPECT_THROW(parse_config(R"({"seeed": 3})"), ConfigError);
  EXPECT_THROW(parse_config(R"({"seed": "three"})"), ConfigError);
  // Values are range-checked by validate(), after parsing.
  EXPECT_THROW(parse_config(R"({"scenarios": -1})").validate(), ConfigError);
  EXPECT_THROW(parse_config(R"({"methods": ["pgc", "nope"]})").validate(), ConfigError);
  EXPECT_THROW(parse_config("{not json"), ConfigError);
  const auto cfg = parse_config(R"({"seed": 9, "scenarios": 4})");
  EXPECT_EQ(cfg.seed, 9u);
  EXPECT_EQ(cfg.scenarios, 4);
  // The canonical echo parses back to itself.
  EXPECT_EQ(config_to_json(parse_config(config_to_json(cfg))), config_to_json(cfg));
}

ExperimentConfig small_align(int scenarios, std::vector<std::string> methods) {
  ExperimentConfig cfg;
  cfg.scenarios = scenarios;
  cfg.methods = std::move(methods);
  return cfg;
}

double rate_of(const AlignmentReport& r, const std::string& method) {
  for (const auto& a : r.aggregates) {
    if (a.method == method && a.co_visible == -1) return a.success_rate_pct;
  }
  ADD_FAILURE() << "no aggregate for " << method;
  return -1.0;
}

TEST(Reports, EmptyReportIsHeaderOnly) {
  EXPECT_EQ(alignment_csv(AlignmentReport{}),
            "scenario_id,co_visible,method,neighbor,pose_returned,success,translation_error_m,rotation_error_deg,bytes\n");
  EXPECT_EQ(sweep_csv(SweepReport{}), "scenario_id,method,sigma_t,sigma_r_deg,iou_thr,ap\n");
  EXPECT_EQ(format_fixed(std::nan("")), "nan");
  EXPECT_EQ(format_fixed(1.5, 2), "1.50");
}

TEST(Reports, AlignmentIsDeterministic) {
  const auto cfg = small_align(4, {"pgc", "icp", "graph", "gt-noise"});
  const auto a = run_alignment_benchmark(cfg), b = run_alignment_benchmark(cfg);
  EXPECT_EQ(alignment_csv(a), alignment_csv(b));
  EXPECT_EQ(alignment_json(a), alignment_json(b));
  auto par = cfg;
  par.parallel = 3;
  EXPECT_EQ(alignment_csv(run_alignment_benchmark(par)), alignment_csv(a));
}

TEST(Reports, NoiselessGnssAlwaysSucceeds) {
  auto cfg = small_align(10, {"gt-noise"});
  cfg.align_noise = {0.0, 0.0};
  const auto r = run_alignment_benchmark(cfg);
  EXPECT_EQ(rate_of(r, "gt-noise"), 100.0);
  for (const auto& row : r.rows) EXPECT_NEAR(row.translation_error_m, 0.0, 1e-9);
}

TEST(Reports, GraphMatchingNeedsSharedObjects) {
  auto cfg = small_align(10, {"graph"});
  cfg.scenario.co_visible = 0;
  EXPECT_EQ(rate_of(run_alignment_benchmark(cfg), "graph"), 0.0);
}

TEST(Reports, PgcSucceedsOnDefaultScenes) {
  const auto r = run_alignment_benchmark(small_align(200, {"pgc"}));
  EXPECT_GE(rate_of(r, "pgc"), 95.0);
}

TEST(Reports, PgcSuccessFallsWithOutlierShare) {
  double prev = 101.0;
  for (double f : {0.1, 0.5, 0.8, 0.9}) {
    auto cfg = small_align(20, {"pgc"});
    cfg.pipeline.oracle.noise.outlier_fraction = f;
    const double rate = rate_of(run_alignment_benchmark(cfg), "pgc");
    EXPECT_LE(rate, prev) << "outlier fraction " << f;
    prev = rate;
  }
  EXPECT_LT(prev, 100.0);
}

TEST(Reports, NoFusionIgnoresPoseNoise) {
  ExperimentConfig cfg;
  cfg.scenarios = 3;
  cfg.noise_levels = {{0.0, 0.0}, {4.0, 4.0}};
  cfg.sweep_methods = {"no-fusion", "baseline"};
  const auto r = run_noise_sweep(cfg);
  std::vector<double> nf;
  for (const auto& c : r.cells) {
    if (c.method == "no-fusion") nf.push_back(c.pooled_ap);
    EXPECT_EQ(c.scenarios, 3u);
    EXPECT_GE(c.pooled_ap, 0.0);
    EXPECT_LE(c.pooled_ap, 1.0);
  }
  ASSERT_EQ(nf.size(), 6u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(nf[i], nf[i + 3]);
  EXPECT_EQ(sweep_csv(r), sweep_csv(run_noise_sweep(cfg)));
}

TEST(Parallel, MapPreservesOrderAndPropagatesErrors) {
  const auto out = parallel_map(4, 100, [](std::size_t i) { return i * i; });
  for (std::size_t i = 0; i < 100; ++i) EXPECT_EQ(out[i], i * i);
  EXPECT_TRUE(parallel_map(3, 0, [](std::size_t i) { return i; }).empty());
  EXPECT_THROW(parallel_map(4, 10,
                            [](std::size_t i) -> int {
                              if (i == 7) throw InvalidArgument("boom");
                              return 0;
                            }),
               InvalidArgument);
}

}  // namespace
}  // namespace coopalign::harness
