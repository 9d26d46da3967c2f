// Acceptance report: one PASS/FAIL line per criterion with its runtime.
// Usage: acceptance_test <coopalign-cli> <scratch-dir>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "coopalign/baselines/graph_match.hpp"
#include "coopalign/common/rng.hpp"
#include "coopalign/detection/average_precision.hpp"
#include "coopalign/detection/iou.hpp"
#include "coopalign/detection/losses.hpp"
#include "coopalign/fusion/alignment.hpp"
#include "coopalign/fusion/fsa_network.hpp"
#include "coopalign/fusion/fsa_oracle.hpp"
#include "coopalign/fusion/rasterize.hpp"
#include "coopalign/fusion/warp.hpp"
#include "coopalign/harness/benchmark.hpp"
#include "coopalign/harness/pipeline.hpp"
#include "coopalign/harness/scenario.hpp"
#include "coopalign/pgc/losses.hpp"
#include "coopalign/pgc/ransac.hpp"
#include "coopalign/temporal/encoder.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace coopalign;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome confidence_closed_form() {
  double prev = 2.0, worst = 0.0;
  bool monotone = true;
  for (double e : {0.0, 0.5, 1.0, 2.0, 10.0}) {
    const double s = pgc::confidence_from_error(e);
    worst = std::max(worst, std::abs(s - 1.0 / (1.0 + e * e)));
    monotone = monotone && s < prev;
    prev = s;
  }
  return {worst <= 1e-12 && monotone, fmt("max |err| %.2e, strictly decreasing %s", worst, monotone ? "yes" : "no")};
}

Outcome temporal_closed_form() {
  double worst = 0.0;
  bool zero_exact = true;
  for (int d : {4, 8, 16}) {
    for (int t = 0; t <= 64; ++t) {
      const auto e = temporal::temporal_encoding(t, d);
      for (int k = 0; 2 * k < d; ++k) {
        worst = std::max(worst, std::abs(e[static_cast<std::size_t>(2 * k)] - std::sin(t / std::pow(10000.0, 2.0 * k / d))));
        worst = std::max(worst, std::abs(e[static_cast<std::size_t>(2 * k + 1)] -
                                         std::cos(t / std::pow(10000.0, (2.0 * k + 1.0) / d))));
      }
    }
    const auto z = temporal::temporal_encoding(0, d);
    for (int i = 0; i < d; ++i) zero_exact = zero_exact && z[static_cast<std::size_t>(i)] == (i % 2 == 0 ? 0.0 : 1.0);
  }
  return {worst <= 1e-12 && zero_exact, fmt("max |err| %.2e, t=0 exact %s", worst, zero_exact ? "yes" : "no")};
}

Outcome ransac_recovery() {
  pgc::OracleErrorModel m;
  m.noise.inlier_sigma = 0.02;
  m.noise.outlier_fraction = 0.3;
  m.noise.outlier_scale = 10.0;
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    Rng rng = Rng::substream(90210, {static_cast<std::uint64_t>(trial)});
    const auto cloud = testing::random_cloud(rng, 1024, 20.0);
    const Pose gt = testing::random_pose(rng, 50.0);
    const auto pred = pgc::oracle_predict(cloud, gt, m, rng);
    pgc::RansacConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(trial);
    const auto est = pgc::ransac_pose(pred, cfg);
    if (!est) continue;
    const auto err = pose_error(est->pose, gt);
    ok += (err.translation_m < 0.1 && err.rotation_deg < 0.5) ? 1 : 0;
  }
  return {ok >= 99, fmt("%d/100 trials within 0.1 m and 0.5 deg", ok)};
}

Outcome covisible_family() {
  harness::ExperimentConfig cfg;
  cfg.scenarios = 50;
  cfg.co_visible_family = {0, 1, 2, 3, 5, 10};
  cfg.methods = {"graph", "pgc"};
  const auto rep = harness::run_alignment_benchmark(cfg);
  std::map<int, double> graph, pgc;
  for (const auto& a : rep.aggregates) {
    if (a.co_visible < 0) continue;
    (a.method == "graph" ? graph : pgc)[a.co_visible] = a.success_rate_pct;
  }
  bool ok = graph.size() == 6 && pgc.size() == 6 && graph[0] == 0.0;
  double prev = -1.0;
  for (const auto& [c, r] : graph) {
    ok = ok && r >= prev;
    prev = r;
  }
  double lo = 101.0, hi = -1.0;
  for (const auto& [c, r] : pgc) {
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  ok = ok && hi - lo < 2.0 && lo > 95.0;
  std::ostringstream os;
  os << "graph";
  for (const auto& [c, r] : graph) os << ' ' << c << ':' << fmt("%.0f%%", r);
  os << " | pgc";
  for (const auto& [c, r] : pgc) os << ' ' << c << ':' << fmt("%.0f%%", r);
  return {ok, os.str()};
}

Outcome message_ordering() {
  harness::ScenarioConfig sc;
  const harness::PipelineConfig pc;
  int checked = 0, ordered = 0, skipped = 0;
  std::size_t pose_max = 0, box_min = SIZE_MAX, box_max = 0, feat_min = SIZE_MAX;
  for (std::size_t s = 0; s < 50; ++s) {
    const auto scen = harness::generate_scenario(sc, harness::scenario_seed(12, s));
    const auto& nbr = scen.agents[1];
    if (nbr.boxes.size() < 5) {
      ++skipped;
      continue;
    }
    const auto est = harness::pgc_estimate(nbr.frames[0], nbr.gt_pose, pc, harness::pipeline_seed(12, s), 1, 0);
    if (!est) {
      ++skipped;
      continue;
    }
    const std::size_t pose = pgc::encode_pose_message(*est).size();
    const std::size_t boxes = baselines::encode_box_message({nbr.boxes}).size();
    const std::size_t feats = fusion::encode_bev_grid(fusion::rasterize_bev(nbr.frames[0], pc.grid)).size();
    ++checked;
    ordered += (pose < boxes && boxes < feats) ? 1 : 0;
    pose_max = std::max(pose_max, pose);
    box_min = std::min(box_min, boxes);
    box_max = std::max(box_max, boxes);
    feat_min = std::min(feat_min, feats);
  }
  return {checked > 0 && ordered == checked,
          fmt("%d/%d ordered (%d skipped); pose <= %zu B, boxes %zu..%zu B, features >= %zu B", ordered, checked,
              skipped, pose_max, box_min, box_max, feat_min)};
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

bool grad_close(double analytic, double numeric) {
  return std::abs(analytic - numeric) < 1e-8 || testing::rel_error(analytic, numeric) < 1e-4;
}

Outcome gradient_contracts() {
  constexpr double kH = 1e-5;
  Rng rng(606);
  // FSA regressor.
  fusion::FsaArchitecture arch;
  arch.in_channels = 4;
  arch.conv_channels = {3, 4};
  arch.kernel = 3;
  arch.hidden = 5;
  auto fp = fusion::FsaParams::random(arch, rng);
  for (auto t : fp.tensors()) {
    for (double& v : t) v += rng.normal(0.0, 0.1);
  }
  const auto spec = fusion::GridSpec::centered(9, 8, 1.0);
  fusion::BevGrid ego(spec, 2), nbr(spec, 2);
  for (double& v : ego.values) v = rng.uniform(-1, 1);
  for (double& v : nbr.values) v = rng.uniform(-1, 1);
  const fusion::OffsetDelta target{0.4, -0.3, 0.05};
  const auto fg = fusion::fsa_backward(fp, ego, nbr, target);
  auto loss = [&] {
    const auto y = fusion::fsa_forward_raw(fp, ego, nbr);
    return 0.5 * ((y[0] - target.dx) * (y[0] - target.dx) + (y[1] - target.dy) * (y[1] - target.dy) +
                  (y[2] - target.dtheta) * (y[2] - target.dtheta));
  };
  auto pt = fp.tensors();
  const auto gt = fg.grads.tensors();
  int fsa_ok = 0, fsa_n = 0;
  double fsa_worst = 0.0;
  for (int k = 0; k < 150; ++k) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pt.size()) - 1));
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(pt[t].size()) - 1));
    const double saved = pt[t][i];
    pt[t][i] = saved + kH;
    const double lp = loss();
    pt[t][i] = saved - kH;
    const double lm = loss();
    pt[t][i] = saved;
    const double num = (lp - lm) / (2 * kH);
    ++fsa_n;
    fsa_ok += grad_close(gt[t][i], num) ? 1 : 0;
    if (std::abs(gt[t][i] - num) >= 1e-8) fsa_worst = std::max(fsa_worst, testing::rel_error(gt[t][i], num));
  }
  // Temporal encoder, end to end.
  temporal::VitConfig vc;
  vc.dim = 4;
  vc.heads = 2;
  vc.layers = 2;
  vc.mlp_hidden = 6;
  auto vp = temporal::ViTParams::random(vc, 3, 77);
  const auto vspec = fusion::GridSpec::centered(2, 2, 1.0);
  std::vector<fusion::BevGrid> frames(2, fusion::BevGrid(vspec, 3));
  for (auto& f : frames) {
    for (double& v : f.values) v = rng.uniform(-1, 1);
  }
  fusion::BevGrid up(vspec, 4);
  for (double& v : up.values) v = rng.normal();
  auto vg = temporal::encode_backward(vp, frames, up);
  auto vgt = vg.tensors();
  auto vpt = vp.tensors();
  int vit_ok = 0, vit_n = 0;
  double vit_worst = 0.0;
  for (int k = 0; k < 150; ++k) {
    const auto t = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vpt.size()) - 1));
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(vpt[t].data.size()) - 1));
    const double saved = vpt[t].data[i];
    vpt[t].data[i] = saved + kH;
    const double lp = dot(temporal::encode(vp, frames).values, up.values);
    vpt[t].data[i] = saved - kH;
    const double lm = dot(temporal::encode(vp, frames).values, up.values);
    vpt[t].data[i] = saved;
    const double num = (lp - lm) / (2 * kH);
    ++vit_n;
    vit_ok += grad_close(vgt[t].data[i], num) ? 1 : 0;
    if (std::abs(vgt[t].data[i] - num) >= 1e-8) vit_worst = std::max(vit_worst, testing::rel_error(vgt[t].data[i], num));
  }
  return {fsa_ok == fsa_n && vit_ok == vit_n && fsa_n >= 100 && vit_n >= 100,
          fmt("FSA %d/%d (max rel %.1e), ViT %d/%d (max rel %.1e)", fsa_ok, fsa_n, fsa_worst, vit_ok, vit_n, vit_worst)};
}

Outcome residual_identity() {
  Rng rng(707);
  temporal::VitConfig vc;
  vc.dim = 8;
  vc.heads = 2;
  vc.layers = 3;
  vc.mlp_hidden = 16;
  auto p = temporal::ViTParams::random(vc, 3, 5);
  temporal::TokenSequence z(2, 9, 8);
  for (double& v : z.values) v = rng.normal();
  double worst_row = 0.0;
  for (const auto& layer : p.layers) {
    const auto a = temporal::vit_attention(layer, z);
    const int s = z.length();
    for (int h = 0; h < vc.heads; ++h) {
      for (int q = 0; q < s; ++q) {
        double sum = 0.0;
        for (int k = 0; k < s; ++k) sum += a[static_cast<std::size_t>((h * s + q) * s + k)];
        worst_row = std::max(worst_row, std::abs(sum - 1.0));
      }
    }
  }
  int identity = 0;
  for (auto& layer : p.layers) {
    std::fill(layer.wo.begin(), layer.wo.end(), 0.0);
    std::fill(layer.bo.begin(), layer.bo.end(), 0.0);
    std::fill(layer.w2.begin(), layer.w2.end(), 0.0);
    std::fill(layer.b2.begin(), layer.b2.end(), 0.0);
    identity += temporal::vit_layer_forward(layer, z).values == z.values ? 1 : 0;
  }
  return {identity == vc.layers && worst_row <= 1e-12,
          fmt("%d/%d layers exact identity, max |row sum - 1| %.1e", identity, vc.layers, worst_row)};
}

Outcome confidence_normalization() {
  Rng rng(808);
  const auto spec = fusion::GridSpec::centered(6, 5, 1.0);
  double worst_sum = 0.0, off_grid = 0.0;
  int exact = 0, trials = 0;
  for (int k = 0; k < 200; ++k) {
    const int n = 2 + static_cast<int>(rng.uniform_int(0, 3));
    std::vector<fusion::BevGrid> grids(static_cast<std::size_t>(n), fusion::BevGrid(spec, 2));
    std::vector<double> sig;
    for (int a = 0; a < n; ++a) sig.push_back(rng.uniform(1e-3, 1.0));
    const auto out = fusion::confidence_embed(grids, sig);
    for (std::size_t c = 0; c < spec.cells(); ++c) {
      double sum = 0.0;
      for (const auto& g : out) sum += g.plane(2)[c];
      worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    }
    const auto w = fusion::confidence_weights(sig);
    // Scalings that are exact in binary floating point.
    for (double c : {2.0, 0.5, 1024.0, std::ldexp(1.0, -30), std::ldexp(1.0, 40)}) {
      std::vector<double> s2;
      for (double s : sig) s2.push_back(c * s);
      ++trials;
      exact += fusion::confidence_weights(s2) == w ? 1 : 0;
    }
    for (double c : {3.7, 0.3, 1e3}) {
      std::vector<double> s2;
      for (double s : sig) s2.push_back(c * s);
      const auto w2 = fusion::confidence_weights(s2);
      for (std::size_t i = 0; i < w.size(); ++i) off_grid = std::max(off_grid, std::abs(w2[i] - w[i]));
    }
  }
  return {worst_sum <= 1e-12 && exact == trials,
          fmt("max |sum - 1| %.1e; power-of-two scalings exact %d/%d; other scalings max dev %.1e", worst_sum, exact,
              trials, off_grid)};
}

Outcome fsa_recovery() {
  const auto spec = fusion::GridSpec::centered(64, 64, 0.5);
  fusion::FsaSearch search;
  search.step_xy = 0.5;
  search.step_theta = deg2rad(1.0);
  int ok = 0;
  double worst_t = 0.0, worst_r = 0.0;
  for (int k = 0; k < 100; ++k) {
    Rng rng = Rng::substream(909, {static_cast<std::uint64_t>(k)});
    std::vector<Eigen::Vector3d> blobs;
    for (int b = 0; b < 8; ++b) blobs.emplace_back(rng.uniform(-11, 11), rng.uniform(-11, 11), rng.uniform(0.5, 1.5));
    const auto ego = testing::gaussian_blobs(spec, blobs, 0.9);
    const fusion::OffsetDelta truth{rng.uniform(-2, 2), rng.uniform(-2, 2), deg2rad(rng.uniform(-10, 10))};
    const auto nbr = fusion::warp_grid(ego, truth.as_pose());
    const auto d = fusion::fsa_oracle_estimate(ego, nbr, search);
    const double et = std::max(std::abs(d.dx - truth.dx), std::abs(d.dy - truth.dy));
    const double er = std::abs(normalize_angle(d.dtheta - truth.dtheta));
    worst_t = std::max(worst_t, et);
    worst_r = std::max(worst_r, er);
    ok += (et <= search.step_xy && er <= search.step_theta) ? 1 : 0;
  }
  return {ok == 100, fmt("%d/100 within one step; worst %.3f m, %.3f deg", ok, worst_t, rad2deg(worst_r))};
}

Outcome metric_oracles() {
  using detection::RotatedBox3D;
  const RotatedBox3D unit{0, 0, 0, 1, 1, 1, 0};
  const double i1 = detection::rotated_iou_bev(unit, unit);
  const double i0 = detection::rotated_iou_bev(unit, RotatedBox3D{3, 0, 0, 1, 1, 1, 0});
  const double i3 = detection::rotated_iou_bev(unit, RotatedBox3D{0.5, 0, 0, 1, 1, 1, 0});
  const bool iou_ok = std::abs(i1 - 1.0) <= 1e-9 && std::abs(i0) <= 1e-9 && std::abs(i3 - 1.0 / 3.0) <= 1e-9;

  // Three ground-truth boxes, four detections: TP, FP, TP, TP by score.
  std::vector<RotatedBox3D> gts{{0, 0, 0, 1.5, 2, 4, 0}, {10, 0, 0, 1.5, 2, 4, 0}, {20, 0, 0, 1.5, 2, 4, 0}};
  std::vector<detection::Detection> dets{{{0.2, 0, 0, 1.5, 2, 4, 0}, 0.9},
                                         {{40, 0, 0, 1.5, 2, 4, 0}, 0.8},
                                         {{10.1, 0.1, 0, 1.5, 2, 4, 0}, 0.7},
                                         {{19.8, 0, 0, 1.5, 2, 4, 0}, 0.6}};
  // Brute force: precision/recall at every cutoff, then the right-envelope area.
  std::vector<double> p, r;
  for (std::size_t cut = 1; cut <= dets.size(); ++cut) {
    std::vector<bool> used(gts.size(), false);
    int tp = 0;
    for (std::size_t d = 0; d < cut; ++d) {
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (!used[g] && detection::rotated_iou_bev(dets[d].box, gts[g]) >= 0.5) {
          used[g] = true;
          ++tp;
          break;
        }
      }
    }
    p.push_back(static_cast<double>(tp) / static_cast<double>(cut));
    r.push_back(static_cast<double>(tp) / static_cast<double>(gts.size()));
  }
  double brute = 0.0, prev_r = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    brute += (r[k] - prev_r) * *std::max_element(p.begin() + static_cast<std::ptrdiff_t>(k), p.end());
    prev_r = r[k];
  }
  const double ap = detection::average_precision(dets, gts, 0.5);
  const bool ap_ok = ap == brute && std::abs(brute - (1.0 / 3.0 + 0.5)) < 1e-12;

  double worst = 0.0;
  for (int k = 1; k < 100; ++k) {
    const double q = k / 100.0;
    worst = std::max(worst, std::abs(detection::focal_loss(q, 1, 1.0, 0.0) + std::log(q)));
    worst = std::max(worst, std::abs(detection::focal_loss(q, 0, 0.0, 0.0) + std::log(1.0 - q)));
  }
  return {iou_ok && ap_ok && worst <= 1e-12,
          fmt("IoU %.12f/%.12f/%.12f; AP %.12f vs brute %.12f; focal vs CE max |diff| %.1e", i1, i0, i3, ap, brute,
              worst)};
}

Outcome noise_directionality() {
  harness::ExperimentConfig cfg;
  cfg.scenarios = 100;
  cfg.sweep_methods = {"baseline", "pastat"};
  const auto rep = harness::run_noise_sweep(cfg);
  std::map<double, std::vector<const harness::SweepCell*>> by_thr_base, by_thr_pastat;
  for (const auto& c : rep.cells) (c.method == "baseline" ? by_thr_base : by_thr_pastat)[c.iou_thr].push_back(&c);
  bool monotone = true, constant = true;
  std::ostringstream os;
  for (auto& [thr, cells] : by_thr_base) {
    os << fmt("baseline@%.1f", thr);
    for (std::size_t k = 0; k < cells.size(); ++k) {
      os << fmt(" %.4f", cells[k]->pooled_ap);
      if (k > 0 && cells[k]->pooled_ap > cells[k - 1]->pooled_ap) monotone = false;
    }
    os << "; ";
  }
  for (auto& [thr, cells] : by_thr_pastat) {
    os << fmt("pastat@%.1f %.4f", thr, cells.front()->pooled_ap);
    for (const auto* c : cells) constant = constant && c->pooled_ap == cells.front()->pooled_ap;
    os << (constant ? " (constant)" : " (varies)") << "; ";
  }
  os << "baseline non-increasing: " << (monotone ? "yes" : "no");
  return {monotone && constant, os.str()};
}

std::map<std::string, std::string> read_tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  if (!fs::exists(dir)) return out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::ifstream in(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    out[fs::relative(e.path(), dir).generic_string()] = ss.str();
  }
  return out;
}

Outcome cli_determinism(const std::string& cli, const fs::path& scratch) {
  fs::remove_all(scratch);
  fs::create_directories(scratch);
  const fs::path cfg = scratch / "config.json";
  std::ofstream(cfg) << R"({"seed": 3, "scenarios": 5, "noise_levels": [[0, 0], [1, 1], [3, 3]]})";
  std::ostringstream os;
  bool ok = true;
  for (const std::string sub : {"selftest", "align", "sweep"}) {
    std::vector<std::map<std::string, std::string>> runs;
    for (int k = 0; k < 2; ++k) {
      const fs::path out = scratch / (sub + std::to_string(k));
      const std::string cmd = "COOPALIGN_LOG=off '" + cli + "' " + sub + " --config '" + cfg.string() + "' --out '" +
                              out.string() + "' --parallel 1 > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) ok = false;
      runs.push_back(read_tree(out));
    }
    const bool same = !runs[0].empty() && runs[0] == runs[1];
    ok = ok && same;
    os << sub << ": " << runs[0].size() << " files " << (same ? "identical" : "DIFFER") << "; ";
  }
  return {ok, os.str()};
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 3) {
    std::fprintf(stderr, "usage: %s <coopalign-cli> <scratch-dir>\n", argv[0]);
    return 2;
  }
  const std::string cli = argv[1];
  const fs::path scratch = argv[2];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"confidence closed form and monotonicity", confidence_closed_form},
      {"temporal encoding closed form", temporal_closed_form},
      {"RANSAC recovery under 30% outliers", ransac_recovery},
      {"co-visible family: graph rises from 0%, PGC flat above 95%", covisible_family},
      {"message sizes: pose < boxes < features", message_ordering},
      {"FSA and ViT gradients vs central differences", gradient_contracts},
      {"zero-branch identity and attention row sums", residual_identity},
      {"confidence channel normalization and scale invariance", confidence_normalization},
      {"FSA oracle recovers injected offsets", fsa_recovery},
      {"IoU, AP and focal-loss oracles", metric_oracles},
      {"AP under pose noise: baseline non-increasing, PGC constant", noise_directionality},
      {"CLI reruns are byte-identical", [&] { return cli_determinism(cli, scratch); }},
  };
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failed += o.pass ? 0 : 1;
    std::printf("%s %2zu %s [%.2f s] %s\n", o.pass ? "PASS" : "FAIL", k + 1, criteria[k].first.c_str(), secs,
                o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
  return failed == 0 ? 0 : 1;
}
