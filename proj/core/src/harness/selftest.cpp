#include "coopalign/harness/selftest.hpp"

#include <cmath>
#include <functional>
#include <numbers>

#include <nlohmann/json.hpp>

#include "coopalign/baselines/graph_match.hpp"
#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"
#include "coopalign/detection/average_precision.hpp"
#include "coopalign/detection/iou.hpp"
#include "coopalign/fusion/alignment.hpp"
#include "coopalign/fusion/warp.hpp"
#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/harness/pipeline.hpp"
#include "coopalign/pgc/kabsch.hpp"
#include "coopalign/pgc/losses.hpp"
#include "coopalign/pgc/ransac.hpp"
#include "coopalign/temporal/encoder.hpp"

namespace coopalign::harness {

namespace {

Pose random_pose(Rng& rng) {
  const Eigen::Vector3d axis = Eigen::Vector3d(rng.normal(), rng.normal(), rng.normal()).normalized();
  Pose p;
  p.rotation = Eigen::AngleAxisd(rng.uniform(-std::numbers::pi, std::numbers::pi), axis).toRotationMatrix();
  p.translation = {rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-5, 5)};
  return p;
}

double pose_gap(const Pose& a, const Pose& b) {
  return (a.rotation - b.rotation).norm() + (a.translation - b.translation).norm();
}

using Check = std::function<std::string(Rng&)>;  // empty string: pass

std::string group_laws(Rng& rng) {
  for (int k = 0; k < 200; ++k) {
    const Pose a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    if (pose_gap(compose(compose(a, b), c), compose(a, compose(b, c))) > 1e-9) return "associativity violated";
    if (pose_gap(compose(a, inverse(a)), Pose::identity()) > 1e-9) return "inverse law violated";
    const auto e = pose_error(a, a);
    if (e.translation_m != 0.0 || e.rotation_deg != 0.0) return "pose_error(p, p) != 0";
  }
  return {};
}

std::string isometry(Rng& rng) {
  PointCloud c;
  for (int k = 0; k < 50; ++k) c.points.emplace_back(rng.normal(0, 10), rng.normal(0, 10), rng.normal(0, 2));
  const PointCloud m = transform_points(random_pose(rng), c);
  for (std::size_t i = 0; i < c.size(); ++i) {
    for (std::size_t j = i + 1; j < c.size(); ++j) {
      if (std::abs((c.points[i] - c.points[j]).norm() - (m.points[i] - m.points[j]).norm()) > 1e-9) {
        return "distance not preserved";
      }
    }
  }
  return {};
}

std::string confidence(Rng&) {
  double prev = 2.0;
  for (double e : {0.0, 0.5, 1.0, 2.0, 10.0}) {
    const double s = pgc::confidence_from_error(e);
    if (std::abs(s - 1.0 / (1.0 + e * e)) > 1e-12) return "closed form mismatch";
    if (!(s < prev)) return "not strictly decreasing";
    prev = s;
  }
  return {};
}

std::string kabsch(Rng& rng) {
  for (int k = 0; k < 20; ++k) {
    PointCloud c;
    for (int i = 0; i < 30; ++i) c.points.emplace_back(rng.normal(0, 5), rng.normal(0, 5), rng.normal(0, 5));
    const Pose t = random_pose(rng);
    if (pose_gap(pgc::kabsch_solve(c, transform_points(t, c)), t) > 1e-9) return "transform not recovered";
  }
  return {};
}

std::string ransac_determinism(Rng& rng) {
  PointCloud c;
  for (int i = 0; i < 300; ++i) c.points.emplace_back(rng.normal(0, 10), rng.normal(0, 10), rng.normal(0, 1));
  pgc::OracleErrorModel model;
  model.noise.inlier_sigma = 0.02;
  model.noise.outlier_fraction = 0.3;
  model.noise.outlier_scale = 10.0;
  const Pose gt = random_pose(rng);
  Rng r1(7);
  const auto pred = pgc::oracle_predict(c, gt, model, r1);
  pgc::RansacConfig cfg;
  cfg.seed = 99;
  const auto a = pgc::ransac_pose(pred, cfg);
  const auto b = pgc::ransac_pose(pred, cfg);
  if (!a || !b) return "no pose";
  if (a->pose.rotation != b->pose.rotation || a->pose.translation != b->pose.translation ||
      a->inlier_indices != b->inlier_indices || a->confidence != b->confidence) {
    return "repeated run differs";
  }
  if (pose_error(a->pose, gt).translation_m > 0.1) return "pose inaccurate";
  return {};
}

std::string encoding(Rng&) {
  for (int d : {4, 8, 16}) {
    for (int t = 0; t <= 64; ++t) {
      const auto e = temporal::temporal_encoding(t, d);
      for (int k = 0; 2 * k < d; ++k) {
        const double s = std::sin(t / std::pow(10000.0, 2.0 * k / d));
        const double c = std::cos(t / std::pow(10000.0, (2.0 * k + 1.0) / d));
        if (std::abs(e[static_cast<std::size_t>(2 * k)] - s) > 1e-12 ||
            std::abs(e[static_cast<std::size_t>(2 * k + 1)] - c) > 1e-12) {
          return "closed form mismatch";
        }
      }
    }
  }
  return {};
}

std::string attention(Rng& rng) {
  temporal::VitConfig vc;
  vc.dim = 8;
  vc.heads = 2;
  vc.layers = 1;
  vc.mlp_hidden = 16;
  const auto p = temporal::ViTParams::random(vc, 8, rng.engine()());
  temporal::TokenSequence z(2, 5, 8);
  for (double& v : z.values) v = rng.normal();
  const auto probs = temporal::vit_attention(p.layers.front(), z);
  const int s = z.length();
  for (int h = 0; h < 2; ++h) {
    for (int q = 0; q < s; ++q) {
      double sum = 0.0;
      for (int k = 0; k < s; ++k) sum += probs[static_cast<std::size_t>((h * s + q) * s + k)];
      if (std::abs(sum - 1.0) > 1e-12) return "attention row does not sum to 1";
    }
  }
  const auto id = temporal::VitLayerParams::zeros(8, 2, 16);
  if (temporal::vit_layer_forward(id, z).values != z.values) return "zero branches are not the identity";
  return {};
}

std::string warp_linearity(Rng& rng) {
  const auto spec = fusion::GridSpec::centered(24, 20, 0.5);
  fusion::BevGrid a(spec, 1), b(spec, 1), ab(spec, 1);
  const double alpha = 0.75, beta = -1.25;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    a.values[i] = rng.normal();
    b.values[i] = rng.normal();
    ab.values[i] = alpha * a.values[i] + beta * b.values[i];
  }
  const Pose2D d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-0.3, 0.3));
  const auto wa = fusion::warp_grid(a, d), wb = fusion::warp_grid(b, d), wab = fusion::warp_grid(ab, d);
  for (std::size_t i = 0; i < wa.values.size(); ++i) {
    if (std::abs(wab.values[i] - (alpha * wa.values[i] + beta * wb.values[i])) > 1e-12) return "warp not linear";
  }
  return {};
}

std::string confidence_embedding(Rng& rng) {
  const auto spec = fusion::GridSpec::centered(4, 4, 1.0);
  std::vector<fusion::BevGrid> grids(3, fusion::BevGrid(spec, 1));
  std::vector<double> sig{rng.uniform(0.1, 1), rng.uniform(0.1, 1), rng.uniform(0.1, 1)};
  const auto out = fusion::confidence_embed(grids, sig);
  for (std::size_t c = 0; c < spec.cells(); ++c) {
    double sum = 0.0;
    for (const auto& g : out) sum += g.plane(1)[c];
    if (std::abs(sum - 1.0) > 1e-12) return "weights do not sum to 1";
  }
  std::vector<double> scaled;
  for (double s : sig) scaled.push_back(4.0 * s);
  if (fusion::confidence_weights(scaled) != fusion::confidence_weights(sig)) return "not scale invariant";
  return {};
}

std::string iou(Rng& rng) {
  for (int k = 0; k < 100; ++k) {
    detection::RotatedBox3D a{rng.uniform(-3, 3), rng.uniform(-3, 3), 0, 1.5, rng.uniform(1, 3), rng.uniform(2, 5),
                              rng.uniform(-3, 3)};
    detection::RotatedBox3D b{rng.uniform(-3, 3), rng.uniform(-3, 3), 0, 1.5, rng.uniform(1, 3), rng.uniform(2, 5),
                              rng.uniform(-3, 3)};
    const double ab = detection::rotated_iou_bev(a, b), ba = detection::rotated_iou_bev(b, a);
    if (!(ab >= 0.0 && ab <= 1.0) || std::abs(ab - ba) > 1e-9) return "IoU not symmetric or out of range";
  }
  return {};
}

std::string ap_invariance(Rng& rng) {
  std::vector<detection::RotatedBox3D> gts;
  std::vector<detection::Detection> dets;
  for (int k = 0; k < 6; ++k) gts.push_back({10.0 * k, 0, 0.8, 1.6, 1.9, 4.4, 0});
  for (int k = 0; k < 10; ++k) {
    detection::RotatedBox3D b{10.0 * (k % 7) + rng.normal(0, 0.5), rng.normal(0, 0.5), 0.8, 1.6, 1.9, 4.4, 0};
    dets.push_back({b, rng.uniform(0.05, 0.95)});
  }
  auto transformed = dets;
  for (auto& d : transformed) d.score = std::pow(d.score, 3.0) * 0.5;
  for (double thr : {0.3, 0.5, 0.7}) {
    if (detection::average_precision(dets, gts, thr) != detection::average_precision(transformed, gts, thr)) {
      return "AP changed under a monotone score transform";
    }
  }
  return {};
}

std::string message_ordering(Rng& rng) {
  ScenarioConfig sc;
  sc.num_objects = 8;
  sc.co_visible = 6;
  const Scenario s = generate_scenario(sc, rng.engine()());
  const Scenario again = generate_scenario(sc, s.seed);
  if (again.agents[1].frames[0].points != s.agents[1].frames[0].points) return "scenario generation not deterministic";
  PipelineConfig pc;
  PipelineOptions o;
  o.pose_source = PoseSource::kGroundTruth;
  o.feature_alignment = false;
  const auto r = run_pipeline(s, pc, o);
  std::size_t sum = 0;
  for (const auto& m : r.ledger.records()) sum += m.bytes;
  if (sum != r.ledger.total_bytes()) return "ledger total mismatch";
  const std::size_t pose = r.ledger.bytes_of(MessageKind::kPose);
  const std::size_t boxes = baselines::encode_box_message({s.agents[1].boxes}).size();
  const std::size_t feats = r.ledger.bytes_of(MessageKind::kFeatures);
  if (!(pose < boxes && boxes < feats)) return "message sizes not ordered pose < boxes < features";
  return {};
}

}  // namespace

std::vector<SelftestCheck> run_selftest(std::uint64_t seed) {
  const std::vector<std::pair<std::string, Check>> checks = {
      {"pose_group_laws", group_laws},
      {"transform_isometry", isometry},
      {"confidence_monotone", confidence},
      {"kabsch_recovery", kabsch},
      {"ransac_determinism", ransac_determinism},
      {"temporal_encoding_closed_form", encoding},
      {"attention_rows_and_residual_identity", attention},
      {"warp_linearity", warp_linearity},
      {"confidence_embedding", confidence_embedding},
      {"rotated_iou_symmetry", iou},
      {"ap_monotone_score_invariance", ap_invariance},
      {"message_size_ordering", message_ordering},
  };
  std::vector<SelftestCheck> out;
  for (std::size_t k = 0; k < checks.size(); ++k) {
    Rng rng = Rng::substream(seed, {k});
    SelftestCheck c;
    c.name = checks[k].first;
    try {
      c.detail = checks[k].second(rng);
      c.passed = c.detail.empty();
    } catch (const std::exception& e) {
      c.detail = std::string("exception: ") + e.what();
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::string selftest_json(const std::vector<SelftestCheck>& checks) {
  nlohmann::ordered_json j;
  std::size_t passed = 0;
  j["checks"] = nlohmann::ordered_json::array();
  for (const auto& c : checks) {
    passed += c.passed ? 1 : 0;
    j["checks"].push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
  }
  j["passed"] = passed;
  j["failed"] = checks.size() - passed;
  return j.dump(2) + "\n";
}

}  // namespace coopalign::harness
