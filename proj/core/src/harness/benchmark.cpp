#include "coopalign/harness/benchmark.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <optional>
#include <sstream>

#include <nlohmann/json.hpp>

#include "coopalign/baselines/graph_match.hpp"
#include "coopalign/baselines/icp.hpp"
#include "coopalign/common/error.hpp"
#include "coopalign/common/log.hpp"
#include "coopalign/detection/average_precision.hpp"
#include "coopalign/geometry/cloud_io.hpp"
#include "coopalign/harness/parallel.hpp"
#include "coopalign/harness/pipeline.hpp"

namespace coopalign::harness {

namespace {

using ojson = nlohmann::ordered_json;

constexpr std::uint64_t kTagScenario = 1;
constexpr std::uint64_t kTagPipeline = 2;
constexpr std::uint64_t kTagAlignNoise = 3;

std::string scenario_id(int co_visible, bool family, std::size_t s) {
  char buf[32];
  if (family) {
    std::snprintf(buf, sizeof buf, "c%02d_s%04zu", co_visible, s);
  } else {
    std::snprintf(buf, sizeof buf, "s%04zu", s);
  }
  return buf;
}

/// Median wall time of `repeats` calls; runs once and reports 0 when untimed.
template <typename F>
double timed(bool measure, int repeats, F&& fn) {
  if (!measure) {
    fn();
    return 0.0;
  }
  std::vector<double> t;
  for (int r = 0; r < repeats; ++r) {
    const auto start = std::chrono::steady_clock::now();
    fn();
    t.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

PointCloud box_corners(const std::vector<detection::RotatedBox3D>& boxes) {
  PointCloud c;
  for (const auto& b : boxes) {
    for (const auto& p : b.footprint()) {
      c.points.emplace_back(p.x(), p.y(), b.z - 0.5 * b.h);
      c.points.emplace_back(p.x(), p.y(), b.z + 0.5 * b.h);
    }
  }
  return c;
}

void fill_error(AlignmentRow& row, const std::optional<Pose>& est, const Pose& gt) {
  row.pose_returned = est.has_value();
  if (!est) {
    row.translation_error_m = std::numeric_limits<double>::quiet_NaN();
    row.rotation_error_deg = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  const PoseError e = pose_error(*est, gt);
  row.translation_error_m = e.translation_m;
  row.rotation_error_deg = e.rotation_deg;
  row.success = e.translation_m < kSuccessTranslationM;
}

std::vector<AlignmentRow> align_scenario(const ExperimentConfig& cfg, int co_visible, bool family, std::size_t s,
                                         bool measure) {
  ScenarioConfig sc = cfg.scenario;
  if (family) sc.co_visible = co_visible;
  const Scenario scen = generate_scenario(sc, scenario_seed(cfg.seed, s));
  const std::uint64_t pseed = pipeline_seed(cfg.seed, s);
  const auto& ego = scen.agents.front();
  const int last = static_cast<int>(ego.frames.size()) - 1;
  const std::string id = scenario_id(co_visible, family, s);
  std::vector<AlignmentRow> rows;

  const auto ego_pgc = pgc_estimate(ego.frames.back(), ego.gt_pose, cfg.pipeline, pseed, 0, last);
  const std::string ego_boxes = baselines::encode_box_message({ego.boxes});

  for (const auto& method : cfg.methods) {
    for (std::size_t j = 1; j < scen.agents.size(); ++j) {
      const auto& nbr = scen.agents[j];
      const Pose gt_rel = relative(ego.gt_pose, nbr.gt_pose);
      AlignmentRow row;
      row.scenario_id = id;
      row.co_visible = family ? co_visible : sc.co_visible;
      row.method = method;
      row.neighbor = static_cast<int>(j);
      std::optional<Pose> est;

      if (method == kMethodPgc) {
        std::optional<pgc::PoseEstimate> nbr_pgc;
        row.time_s = timed(measure, cfg.timing_repeats, [&] {
          nbr_pgc = pgc_estimate(nbr.frames.back(), nbr.gt_pose, cfg.pipeline, pseed, static_cast<int>(j), last);
          if (ego_pgc && nbr_pgc) est = relative(ego_pgc->pose, nbr_pgc->pose);
        });
        row.bytes = nbr_pgc ? pgc::encode_pose_message(*nbr_pgc).size() : 0;
      } else if (method == kMethodGtNoise) {
        pgc::PoseEstimate msg;
        row.time_s = timed(measure, cfg.timing_repeats, [&] {
          Rng re = Rng::substream(cfg.seed, {kTagAlignNoise, s, 0});
          Rng rn = Rng::substream(cfg.seed, {kTagAlignNoise, s, j});
          const Pose pe = perturb_pose(ego.gt_pose, cfg.align_noise, re);
          msg.pose = perturb_pose(nbr.gt_pose, cfg.align_noise, rn);
          msg.confidence = 1.0;
          msg.inlier_ratio = 1.0;
          est = relative(pe, msg.pose);
        });
        row.bytes = pgc::encode_pose_message(msg).size();
      } else {
        const std::string message = baselines::encode_box_message({nbr.boxes});
        row.bytes = message.size();
        if (method == kMethodGraph) {
          row.time_s = timed(measure, cfg.timing_repeats, [&] {
            const baselines::BoxObservation e{detection::decode_boxes_json(ego_boxes)};
            const baselines::BoxObservation n{detection::decode_boxes_json(message)};
            const auto m = baselines::graph_match_align(e, n, cfg.graph);
            est = m ? std::optional<Pose>(m->pose) : std::nullopt;
          });
        } else {
          row.time_s = timed(measure, cfg.timing_repeats, [&] {
            const PointCloud src = box_corners(detection::decode_boxes_json(message));
            const PointCloud dst = box_corners(detection::decode_boxes_json(ego_boxes));
            est.reset();
            if (src.size() >= 3 && dst.size() >= 3) {
              const auto r = baselines::icp_align(src, dst, cfg.icp);
              if (r) est = r->pose;
            }
          });
        }
      }
      fill_error(row, est, gt_rel);
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

}  // namespace

std::uint64_t scenario_seed(std::uint64_t root, std::size_t s) { return derive_seed(root, {kTagScenario, s}); }
std::uint64_t pipeline_seed(std::uint64_t root, std::size_t s) { return derive_seed(root, {kTagPipeline, s}); }
std::string scenario_name(std::size_t s) { return scenario_id(-1, false, s); }

std::vector<MethodAggregate> aggregate_alignment(const std::vector<AlignmentRow>& rows) {
  std::vector<MethodAggregate> out;
  std::vector<int> families;
  for (const auto& r : rows) {
    if (std::find(families.begin(), families.end(), r.co_visible) == families.end()) families.push_back(r.co_visible);
  }
  std::vector<std::string> methods;
  for (const auto& r : rows) {
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) methods.push_back(r.method);
  }
  auto build = [&](const std::string& m, std::optional<int> fam) {
    MethodAggregate a;
    a.method = m;
    a.co_visible = fam.value_or(-1);
    double bytes = 0.0, time = 0.0;
    for (const auto& r : rows) {
      if (r.method != m || (fam && r.co_visible != *fam)) continue;
      ++a.alignments;
      a.successes += r.success ? 1 : 0;
      bytes += static_cast<double>(r.bytes);
      time += r.time_s;
    }
    if (a.alignments > 0) {
      const auto n = static_cast<double>(a.alignments);
      a.success_rate_pct = 100.0 * static_cast<double>(a.successes) / n;
      a.mean_bytes = bytes / n;
      a.log2_mean_bytes = a.mean_bytes > 0.0 ? std::log2(a.mean_bytes) : 0.0;
      a.mean_time_s = time / n;
    }
    return a;
  };
  for (const auto& m : methods) {
    out.push_back(build(m, std::nullopt));
    if (families.size() > 1) {
      for (int f : families) out.push_back(build(m, f));
    }
  }
  return out;
}

AlignmentReport run_alignment_benchmark(const ExperimentConfig& cfg, bool measure_time) {
  cfg.validate();
  const bool family = !cfg.co_visible_family.empty();
  const std::vector<int> counts = family ? cfg.co_visible_family : std::vector<int>{cfg.scenario.co_visible};
  const auto per = static_cast<std::size_t>(cfg.scenarios);
  // Timing runs sequentially so measurements do not contend for cores.
  const int workers = measure_time ? 1 : cfg.parallel;
  auto chunks = parallel_map(workers, counts.size() * per, [&](std::size_t k) {
    return align_scenario(cfg, counts[k / per], family, k % per, measure_time);
  });
  AlignmentReport rep;
  rep.timed = measure_time;
  for (auto& c : chunks) {
    for (auto& r : c) rep.rows.push_back(std::move(r));
  }
  rep.aggregates = aggregate_alignment(rep.rows);
  return rep;
}

SweepReport run_noise_sweep(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto& pc = cfg.pipeline;
  const double half_extent = 0.5 * std::min(pc.grid.width, pc.grid.height) * pc.grid.resolution;
  const auto& levels = cfg.noise_levels;
  const auto& methods = cfg.sweep_methods;
  const auto& thresholds = cfg.eval.iou_thresholds;

  struct ScenarioResult {
    std::vector<detection::RotatedBox3D> gt;
    std::vector<std::vector<detection::Detection>> dets;  // [level * methods + method]
  };
  auto per_scenario = parallel_map(cfg.parallel, static_cast<std::size_t>(cfg.scenarios), [&](std::size_t s) {
    const Scenario scen = generate_scenario(cfg.scenario, scenario_seed(cfg.seed, s));
    ScenarioResult r;
    r.gt = ego_ground_truth(scen, cfg.scenario.sensing_range, half_extent);
    for (const auto& level : levels) {
      for (const auto& m : methods) {
        PipelineOptions o;
        o.seed = pipeline_seed(cfg.seed, s);
        if (m == kSweepNoFusion) {
          o.pose_source = PoseSource::kGroundTruth;
          o.fuse_neighbors = false;
        } else if (m == kSweepBaseline) {
          o.pose_source = PoseSource::kGnss;
          o.gnss_noise = level;
          o.confidence_embedding = false;
          o.feature_alignment = false;
        } else {
          o.pose_source = PoseSource::kPgc;
        }
        auto dets = run_pipeline(scen, pc, o).detections;
        std::erase_if(dets, [&](const detection::Detection& d) { return d.score < cfg.eval.score_threshold; });
        r.dets.push_back(std::move(dets));
      }
    }
    return r;
  });

  SweepReport rep;
  for (std::size_t s = 0; s < per_scenario.size(); ++s) {
    const auto id = scenario_id(-1, false, s);
    for (std::size_t l = 0; l < levels.size(); ++l) {
      for (std::size_t m = 0; m < methods.size(); ++m) {
        const auto& dets = per_scenario[s].dets[l * methods.size() + m];
        for (double thr : thresholds) {
          rep.rows.push_back({id, methods[m], levels[l].sigma_t, levels[l].sigma_r_deg, thr,
                              detection::average_precision(dets, per_scenario[s].gt, thr)});
        }
      }
    }
  }
  for (std::size_t l = 0; l < levels.size(); ++l) {
    for (std::size_t m = 0; m < methods.size(); ++m) {
      std::vector<detection::EvalFrame> frames;
      for (const auto& r : per_scenario) frames.push_back({r.dets[l * methods.size() + m], r.gt});
      for (double thr : thresholds) {
        rep.cells.push_back({methods[m], levels[l].sigma_t, levels[l].sigma_r_deg, thr,
                             detection::pooled_average_precision(frames, thr), frames.size()});
      }
    }
  }
  return rep;
}

std::string format_fixed(double v, int digits) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string alignment_csv(const AlignmentReport& report) {
  std::ostringstream os;
  os << "scenario_id,co_visible,method,neighbor,pose_returned,success,translation_error_m,rotation_error_deg,bytes\n";
  for (const auto& r : report.rows) {
    os << r.scenario_id << ',' << r.co_visible << ',' << r.method << ',' << r.neighbor << ',' << (r.pose_returned ? 1 : 0)
       << ',' << (r.success ? 1 : 0) << ',' << format_fixed(r.translation_error_m) << ','
       << format_fixed(r.rotation_error_deg) << ',' << r.bytes << '\n';
  }
  return os.str();
}

std::string alignment_json(const AlignmentReport& report) {
  ojson j;
  j["success_threshold_m"] = kSuccessTranslationM;
  j["aggregates"] = ojson::array();
  for (const auto& a : report.aggregates) {
    j["aggregates"].push_back({{"method", a.method},
                               {"co_visible", a.co_visible},
                               {"alignments", a.alignments},
                               {"successes", a.successes},
                               {"success_rate_pct", a.success_rate_pct},
                               {"mean_bytes", a.mean_bytes},
                               {"log2_mean_bytes", a.log2_mean_bytes}});
  }
  return j.dump(2) + "\n";
}

namespace {

std::string timing_csv(const AlignmentReport& report) {
  std::ostringstream os;
  os << "scenario_id,method,neighbor,time_s\n";
  for (const auto& r : report.rows) {
    os << r.scenario_id << ',' << r.method << ',' << r.neighbor << ',' << format_fixed(r.time_s, 9) << '\n';
  }
  return os.str();
}

std::string timing_json(const AlignmentReport& report) {
  ojson j = ojson::array();
  for (const auto& a : report.aggregates) {
    j.push_back({{"method", a.method}, {"co_visible", a.co_visible}, {"mean_time_s", a.mean_time_s}});
  }
  return j.dump(2) + "\n";
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void emit_alignment_report(const AlignmentReport& report, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file_bytes(dir / "align.csv", alignment_csv(report));
  write_file_bytes(dir / "align.json", alignment_json(report));
  if (report.timed) {
    write_file_bytes(dir / "align_timing.csv", timing_csv(report));
    write_file_bytes(dir / "align_timing.json", timing_json(report));
  }
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream os;
  os << "scenario_id,method,sigma_t,sigma_r_deg,iou_thr,ap\n";
  for (const auto& r : report.rows) {
    os << r.scenario_id << ',' << r.method << ',' << format_fixed(r.sigma_t, 3) << ',' << format_fixed(r.sigma_r_deg, 3)
       << ',' << format_fixed(r.iou_thr, 2) << ',' << format_fixed(r.ap) << '\n';
  }
  return os.str();
}

std::string sweep_json(const SweepReport& report) {
  ojson j;
  j["cells"] = ojson::array();
  for (const auto& c : report.cells) {
    j["cells"].push_back({{"method", c.method},
                          {"sigma_t", c.sigma_t},
                          {"sigma_r_deg", c.sigma_r_deg},
                          {"iou_thr", c.iou_thr},
                          {"pooled_ap", c.pooled_ap},
                          {"scenarios", c.scenarios}});
  }
  return j.dump(2) + "\n";
}

void emit_sweep_report(const SweepReport& report, const std::filesystem::path& dir) {
  ensure_dir(dir);
  write_file_bytes(dir / "sweep.csv", sweep_csv(report));
  write_file_bytes(dir / "sweep.json", sweep_json(report));
}

}  // namespace coopalign::harness
