// coopalign command-line front end.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "coopalign/common/error.hpp"
#include "coopalign/common/log.hpp"
#include "coopalign/detection/box.hpp"
#include "coopalign/geometry/cloud_io.hpp"
#include "coopalign/harness/benchmark.hpp"
#include "coopalign/harness/config.hpp"
#include "coopalign/harness/parallel.hpp"
#include "coopalign/harness/pipeline.hpp"
#include "coopalign/harness/scenario.hpp"
#include "coopalign/harness/selftest.hpp"

namespace {

namespace ch = coopalign::harness;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitRuntime = 2;

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string methods;
  std::optional<int> parallel;
  bool timing = false;
};

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string item; std::getline(ss, item, ',');) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ch::ExperimentConfig resolve(const CommonFlags& f, bool sweep_methods) {
  ch::ExperimentConfig cfg = f.config.empty() ? ch::ExperimentConfig{} : ch::load_config(f.config);
  if (f.seed) cfg.seed = *f.seed;
  if (!f.out.empty()) cfg.out_dir = f.out;
  if (f.parallel) cfg.parallel = *f.parallel;
  if (!f.methods.empty()) (sweep_methods ? cfg.sweep_methods : cfg.methods) = split_list(f.methods);
  cfg.validate();
  return cfg;
}

int cmd_gen(const ch::ExperimentConfig& cfg) {
  const auto dir = cfg.out_dir / "scenarios";
  ch::parallel_map(cfg.parallel, static_cast<std::size_t>(cfg.scenarios), [&](std::size_t s) {
    const auto scen = ch::generate_scenario(cfg.scenario, ch::scenario_seed(cfg.seed, s));
    ch::write_scenario(dir / ch::scenario_name(s), scen);
    return 0;
  });
  coopalign::write_file_bytes(cfg.out_dir / "config.json", ch::config_to_json(cfg));
  std::printf("wrote %d scenarios to %s\n", cfg.scenarios, dir.string().c_str());
  return kExitOk;
}

int cmd_align(const ch::ExperimentConfig& cfg, bool timing) {
  const auto rep = ch::run_alignment_benchmark(cfg, timing);
  ch::emit_alignment_report(rep, cfg.out_dir);
  std::printf("%-10s %10s %8s %12s %14s%s\n", "method", "co_visible", "n", "success_%", "log2_bytes",
              timing ? "     mean_time_s" : "");
  for (const auto& a : rep.aggregates) {
    std::printf("%-10s %10d %8zu %12.2f %14.3f", a.method.c_str(), a.co_visible, a.alignments, a.success_rate_pct,
                a.log2_mean_bytes);
    if (timing) std::printf(" %15.6f", a.mean_time_s);
    std::printf("\n");
  }
  return kExitOk;
}

int cmd_sweep(const ch::ExperimentConfig& cfg) {
  const auto rep = ch::run_noise_sweep(cfg);
  ch::emit_sweep_report(rep, cfg.out_dir);
  std::printf("%-10s %8s %8s %6s %10s\n", "method", "sigma_t", "sigma_r", "iou", "pooled_ap");
  for (const auto& c : rep.cells) {
    std::printf("%-10s %8.2f %8.2f %6.2f %10.4f\n", c.method.c_str(), c.sigma_t, c.sigma_r_deg, c.iou_thr,
                c.pooled_ap);
  }
  return kExitOk;
}

int cmd_pipeline(const ch::ExperimentConfig& cfg, const std::string& methods_flag) {
  auto log = coopalign::logger();
  if (std::getenv("COOPALIGN_LOG") == nullptr) log->set_level(spdlog::level::info);
  const auto scen = ch::generate_scenario(cfg.scenario, ch::scenario_seed(cfg.seed, 0));
  const std::string method = methods_flag.empty() ? std::string(ch::kSweepPastat) : cfg.sweep_methods.front();
  ch::PipelineOptions o;
  o.seed = ch::pipeline_seed(cfg.seed, 0);
  if (method == ch::kSweepNoFusion) {
    o.pose_source = ch::PoseSource::kGroundTruth;
    o.fuse_neighbors = false;
  } else if (method == ch::kSweepBaseline) {
    o.pose_source = ch::PoseSource::kGnss;
    o.gnss_noise = cfg.noise_levels.empty() ? coopalign::GaussianPoseNoise{} : cfg.noise_levels.front();
    o.confidence_embedding = false;
    o.feature_alignment = false;
  }
  log->info("scenario {}: {} agents, {} objects, {} frames", ch::scenario_name(0), scen.agents.size(),
            scen.world_objects.size(), scen.agents.front().frames.size());
  const auto res = ch::run_pipeline(scen, cfg.pipeline, o);
  for (std::size_t a = 0; a < res.estimates.size(); ++a) {
    if (res.estimates[a]) {
      const auto err = coopalign::pose_error(res.estimates[a]->pose, scen.agents[a].gt_pose);
      log->info("agent {}: confidence {:.4f}, inlier ratio {:.3f}, pose error {:.4f} m / {:.4f} deg", a,
                res.estimates[a]->confidence, res.estimates[a]->inlier_ratio, err.translation_m, err.rotation_deg);
    } else {
      log->info("agent {}: no pose", a);
    }
  }
  for (const auto& n : res.neighbors) {
    log->info("frame {} agent {}: included={} fsa=({:.3f} m, {:.3f} m, {:.3f} deg)", n.frame, n.agent, n.included,
              n.fsa_offset.dx, n.fsa_offset.dy, coopalign::rad2deg(n.fsa_offset.dtheta));
  }
  log->info("{} detections, {} bytes exchanged", res.detections.size(), res.ledger.total_bytes());

  const auto dir = cfg.out_dir / "pipeline";
  std::filesystem::create_directories(dir);
  coopalign::write_file_bytes(dir / "detections.json", coopalign::detection::encode_detections_json(res.detections));
  const auto half = 0.5 * cfg.pipeline.grid.width * cfg.pipeline.grid.resolution;
  coopalign::write_file_bytes(
      dir / "ground_truth.json",
      coopalign::detection::encode_boxes_json(ch::ego_ground_truth(scen, cfg.scenario.sensing_range, half)));
  coopalign::write_file_bytes(dir / "ledger.csv", res.ledger.to_csv());
  nlohmann::ordered_json trace;
  trace["method"] = method;
  trace["neighbors"] = nlohmann::ordered_json::array();
  for (const auto& n : res.neighbors) {
    trace["neighbors"].push_back({{"frame", n.frame},
                                  {"agent", n.agent},
                                  {"included", n.included},
                                  {"confidence", n.confidence},
                                  {"fsa_applied", n.fsa_applied},
                                  {"fsa_offset", {n.fsa_offset.dx, n.fsa_offset.dy, n.fsa_offset.dtheta}}});
  }
  trace["detections"] = res.detections.size();
  trace["total_bytes"] = res.ledger.total_bytes();
  coopalign::write_file_bytes(dir / "trace.json", trace.dump(2) + "\n");
  std::printf("%zu detections; outputs in %s\n", res.detections.size(), dir.string().c_str());
  return kExitOk;
}

int cmd_selftest(const ch::ExperimentConfig& cfg) {
  const auto checks = ch::run_selftest(cfg.seed);
  std::filesystem::create_directories(cfg.out_dir);
  coopalign::write_file_bytes(cfg.out_dir / "selftest.json", ch::selftest_json(checks));
  bool ok = true;
  for (const auto& c : checks) {
    std::printf("%s %s%s%s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.empty() ? "" : ": ",
                c.detail.c_str());
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent pose alignment and feature fusion benchmarks"};
  app.require_subcommand(1);
  CommonFlags flags;
  app.add_option("--config", flags.config, "JSON experiment configuration");
  app.add_option("--seed", flags.seed, "root seed (overrides the config)");
  app.add_option("--out", flags.out, "output directory (overrides the config)");
  app.add_option("--methods", flags.methods, "comma-separated method list (overrides the config)");
  app.add_option("--parallel", flags.parallel, "worker threads")->check(CLI::PositiveNumber);

  auto* gen = app.add_subcommand("gen", "write scenario files");
  auto* align = app.add_subcommand("align", "alignment benchmark (success rate, bytes, time)");
  align->add_flag("--timing", flags.timing, "measure alignment wall time into align_timing.*");
  auto* sweep = app.add_subcommand("sweep", "GNSS noise sweep of detection AP");
  auto* pipe = app.add_subcommand("pipeline", "single end-to-end run with verbose tracing");
  auto* self = app.add_subcommand("selftest", "invariant suite");
  for (auto* sub : {gen, align, sweep, pipe, self}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitConfig;
  }

  try {
    const bool sweep_like = sweep->parsed() || pipe->parsed();
    const auto cfg = resolve(flags, sweep_like);
    if (gen->parsed()) return cmd_gen(cfg);
    if (align->parsed()) return cmd_align(cfg, flags.timing);
    if (sweep->parsed()) return cmd_sweep(cfg);
    if (pipe->parsed()) return cmd_pipeline(cfg, flags.methods);
    return cmd_selftest(cfg);
  } catch (const coopalign::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
}
