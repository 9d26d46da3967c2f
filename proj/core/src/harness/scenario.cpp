#include "coopalign/harness/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <nlohmann/json.hpp>

#include "coopalign/common/error.hpp"
#include "coopalign/geometry/cloud_io.hpp"

namespace coopalign::harness {

using detection::RotatedBox3D;

void ScenarioConfig::validate() const {
  if (num_agents < 1 || num_agents > 4) throw ConfigError("scenario: num_agents must be in [1, 4]");
  if (num_objects < 0) throw ConfigError("scenario: num_objects must be >= 0");
  if (co_visible > num_objects) throw ConfigError("scenario: co_visible exceeds num_objects");
  if (!(sensing_range > 0.0)) throw ConfigError("scenario: sensing_range must be positive");
  if (num_agents > 1 && !(agent_separation > 0.0 && agent_separation < 2.0 * sensing_range)) {
    throw ConfigError("scenario: agent_separation must lie in (0, 2 * sensing_range)");
  }
  if (!(points_per_m2 > 0.0) || ground_points < 0 || clutter_points < 0 || clutter_blobs < 0) {
    throw ConfigError("scenario: sampling densities and counts must be non-negative");
  }
  if (!(clutter_max_height > 0.0) || !(min_object_gap >= 0.0) || !(yaw_jitter_deg >= 0.0) ||
      !(box_noise_sigma >= 0.0)) {
    throw ConfigError("scenario: clutter height, gaps, jitter and box noise must be non-negative");
  }
  if (frames < 1 || max_retries < 1) throw ConfigError("scenario: frames and max_retries must be >= 1");
}

namespace {

Eigen::Vector2d xy(const Pose& p) { return p.translation.head<2>(); }

double heading_family(Rng& rng, double jitter) {
  const double base = rng.bernoulli(0.5) ? std::numbers::pi : 0.0;
  return normalize_angle(base + rng.uniform(-jitter, jitter));
}

Eigen::Vector2d sample_disc(const Eigen::Vector2d& c, double radius, Rng& rng) {
  const double r = radius * std::sqrt(rng.uniform());
  const double a = rng.uniform(-std::numbers::pi, std::numbers::pi);
  return c + r * Eigen::Vector2d(std::cos(a), std::sin(a));
}

bool segments_cross(const Eigen::Vector2d& p, const Eigen::Vector2d& q, const Eigen::Vector2d& a,
                    const Eigen::Vector2d& b) {
  auto orient = [](const Eigen::Vector2d& o, const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return (u.x() - o.x()) * (v.y() - o.y()) - (u.y() - o.y()) * (v.x() - o.x());
  };
  const double d1 = orient(a, b, p), d2 = orient(a, b, q), d3 = orient(p, q, a), d4 = orient(p, q, b);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

bool inside_footprint(const std::array<Eigen::Vector2d, 4>& fp, const Eigen::Vector2d& p) {
  for (std::size_t k = 0; k < 4; ++k) {
    const Eigen::Vector2d e = fp[(k + 1) % 4] - fp[k];
    const Eigen::Vector2d d = p - fp[k];
    if (e.x() * d.y() - e.y() * d.x() < 0.0) return false;
  }
  return true;
}

/// True when the sight line from the sensor to the point passes through a
/// vehicle taller than the point (other than the one it lies on).
bool occluded(const Eigen::Vector2d& sensor, const Eigen::Vector3d& p, std::size_t own,
              const std::vector<RotatedBox3D>& objects, const std::vector<std::array<Eigen::Vector2d, 4>>& fps) {
  const Eigen::Vector2d q = p.head<2>();
  for (std::size_t j = 0; j < objects.size(); ++j) {
    if (j == own || p.z() >= objects[j].h) continue;
    if (inside_footprint(fps[j], q)) return true;
    for (std::size_t k = 0; k < 4; ++k) {
      if (segments_cross(sensor, q, fps[j][k], fps[j][(k + 1) % 4])) return true;
    }
  }
  return false;
}

std::vector<Eigen::Vector3d> sample_vehicle(const RotatedBox3D& b, const Eigen::Vector2d& sensor, double density,
                                            Rng& rng) {
  std::vector<Eigen::Vector3d> pts;
  const double c = std::cos(b.theta), s = std::sin(b.theta);
  auto to_world = [&](double u, double v, double z) {
    return Eigen::Vector3d(b.x + c * u - s * v, b.y + s * u + c * v, z);
  };
  const auto top = static_cast<int>(std::ceil(b.l * b.w * density));
  for (int k = 0; k < top; ++k) {
    pts.push_back(to_world(rng.uniform(-0.5 * b.l, 0.5 * b.l), rng.uniform(-0.5 * b.w, 0.5 * b.w), b.h));
  }
  // Side faces: (outward normal in box frame, half-extent along the face, offset).
  struct Face {
    double nu, nv;
  };
  for (const Face f : {Face{1, 0}, Face{-1, 0}, Face{0, 1}, Face{0, -1}}) {
    const double offset = f.nu != 0.0 ? 0.5 * b.l : 0.5 * b.w;
    const double span = f.nu != 0.0 ? b.w : b.l;
    const Eigen::Vector3d center = to_world(f.nu * offset, f.nv * offset, 0.0);
    const Eigen::Vector2d normal(c * f.nu - s * f.nv, s * f.nu + c * f.nv);
    if (normal.dot(sensor - center.head<2>()) <= 0.0) continue;
    const auto n = static_cast<int>(std::ceil(span * b.h * density));
    for (int k = 0; k < n; ++k) {
      const double along = rng.uniform(-0.5 * span, 0.5 * span);
      const double z = rng.uniform(0.0, b.h);
      pts.push_back(f.nu != 0.0 ? to_world(f.nu * offset, along, z) : to_world(along, f.nv * offset, z));
    }
  }
  return pts;
}

RotatedBox3D random_vehicle(const Eigen::Vector2d& at, double jitter, Rng& rng) {
  RotatedBox3D b;
  b.x = at.x();
  b.y = at.y();
  b.l = rng.uniform(3.8, 5.0);
  b.w = rng.uniform(1.7, 2.1);
  b.h = rng.uniform(1.4, 1.8);
  b.z = 0.5 * b.h;
  b.theta = heading_family(rng, jitter);
  return b;
}

}  // namespace

Scenario generate_scenario(const ScenarioConfig& cfg, Rng& rng) {
  cfg.validate();
  Scenario sc;
  const double jitter = deg2rad(cfg.yaw_jitter_deg);
  const double range = cfg.sensing_range;

  // Agents: ego somewhere in the world, neighbors evenly spread around it.
  const Eigen::Vector2d ego_xy(rng.uniform(-100.0, 100.0), rng.uniform(-100.0, 100.0));
  const double phase = rng.uniform(-std::numbers::pi, std::numbers::pi);
  for (int a = 0; a < cfg.num_agents; ++a) {
    Eigen::Vector2d p = ego_xy;
    if (a > 0) {
      const double ang = phase + 2.0 * std::numbers::pi * (a - 1) / (cfg.num_agents - 1);
      p += cfg.agent_separation * Eigen::Vector2d(std::cos(ang), std::sin(ang));
    }
    AgentView v;
    v.id = a;
    v.gt_pose = Pose::from_yaw(heading_family(rng, jitter), Eigen::Vector3d(p.x(), p.y(), 0.0));
    sc.agents.push_back(std::move(v));
  }
  auto in_range = [&](const Eigen::Vector2d& p, int a) {
    return (p - xy(sc.agents[static_cast<std::size_t>(a)].gt_pose)).norm() <= range;
  };
  auto range_count = [&](const Eigen::Vector2d& p) {
    int n = 0;
    for (int a = 0; a < cfg.num_agents; ++a) n += in_range(p, a) ? 1 : 0;
    return n;
  };

  // Vehicles.
  for (int k = 0; k < cfg.num_objects; ++k) {
    const bool constrained = cfg.co_visible >= 0;
    const bool shared = constrained && k < cfg.co_visible;
    const int owner = constrained && !shared ? (k - cfg.co_visible) % cfg.num_agents
                                             : static_cast<int>(k % cfg.num_agents);
    bool placed = false;
    for (int attempt = 0; attempt < cfg.max_retries && !placed; ++attempt) {
      const Eigen::Vector2d p = sample_disc(xy(sc.agents[static_cast<std::size_t>(owner)].gt_pose), range, rng);
      const int seen_by = range_count(p);
      if (constrained && shared && seen_by != cfg.num_agents) continue;
      if (constrained && !shared && seen_by != 1) continue;
      bool clear = true;
      for (const auto& o : sc.world_objects) clear = clear && (Eigen::Vector2d(o.x, o.y) - p).norm() >= cfg.min_object_gap;
      for (const auto& a : sc.agents) clear = clear && (xy(a.gt_pose) - p).norm() >= 4.0;
      if (!clear) continue;
      sc.world_objects.push_back(random_vehicle(p, jitter, rng));
      placed = true;
    }
    if (!placed) {
      throw InfeasibleScenario("generate_scenario: could not place object " + std::to_string(k) + " within " +
                               std::to_string(cfg.max_retries) + " attempts");
    }
  }

  for (int k = 0; k < cfg.clutter_blobs; ++k) {
    const auto owner = static_cast<std::size_t>(k % cfg.num_agents);
    ClutterBlob b;
    b.center = sample_disc(xy(sc.agents[owner].gt_pose), range, rng);
    b.radius = 0.8;
    b.height = rng.uniform(0.2, cfg.clutter_max_height);
    sc.clutter.push_back(b);
  }

  std::vector<std::array<Eigen::Vector2d, 4>> fps;
  for (const auto& o : sc.world_objects) fps.push_back(o.footprint());

  for (auto& agent : sc.agents) {
    const Eigen::Vector2d sensor = xy(agent.gt_pose);
    const Pose world_to_agent = inverse(agent.gt_pose);
    std::vector<std::size_t> near_blobs;
    for (std::size_t b = 0; b < sc.clutter.size(); ++b) {
      if ((sc.clutter[b].center - sensor).norm() <= range + sc.clutter[b].radius) near_blobs.push_back(b);
    }
    for (int t = 0; t < cfg.frames; ++t) {
      std::vector<Eigen::Vector3d> world_pts;
      auto keep = [&](const Eigen::Vector3d& p, std::size_t own) {
        if ((p.head<2>() - sensor).norm() > range) return;
        if (cfg.occlusion && occluded(sensor, p, own, sc.world_objects, fps)) return;
        world_pts.push_back(p);
      };
      for (std::size_t k = 0; k < sc.world_objects.size(); ++k) {
        const auto& o = sc.world_objects[k];
        if ((Eigen::Vector2d(o.x, o.y) - sensor).norm() > range + 0.5 * std::hypot(o.l, o.w)) continue;
        for (const auto& p : sample_vehicle(o, sensor, cfg.points_per_m2, rng)) keep(p, k);
      }
      const std::size_t none = sc.world_objects.size();
      for (int g = 0; g < cfg.ground_points; ++g) {
        const Eigen::Vector2d q = sample_disc(sensor, range, rng);
        keep({q.x(), q.y(), 0.0}, none);
      }
      if (!near_blobs.empty()) {
        for (int g = 0; g < cfg.clutter_points; ++g) {
          const auto& blob = sc.clutter[near_blobs[static_cast<std::size_t>(
              rng.uniform_int(0, static_cast<std::int64_t>(near_blobs.size()) - 1))]];
          const Eigen::Vector2d q = sample_disc(blob.center, blob.radius, rng);
          keep({q.x(), q.y(), rng.uniform(0.0, blob.height)}, none);
        }
      }
      PointCloud cloud;
      cloud.points.reserve(world_pts.size());
      for (const auto& p : world_pts) cloud.points.push_back(world_to_agent.apply(p));
      agent.frames.push_back(std::move(cloud));
    }
    for (std::size_t k = 0; k < sc.world_objects.size(); ++k) {
      const auto& o = sc.world_objects[k];
      if ((Eigen::Vector2d(o.x, o.y) - sensor).norm() > range) continue;
      agent.visible.push_back(k);
      RotatedBox3D b = detection::transform_box(world_to_agent, o);
      if (cfg.box_noise_sigma > 0.0) {
        b.x += rng.normal(0.0, cfg.box_noise_sigma);
        b.y += rng.normal(0.0, cfg.box_noise_sigma);
      }
      agent.boxes.push_back(b);
    }
  }
  return sc;
}

Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed) {
  Rng rng(seed);
  Scenario s = generate_scenario(cfg, rng);
  s.seed = seed;
  return s;
}

std::vector<RotatedBox3D> ego_ground_truth(const Scenario& s, double sensing_range, double half_extent) {
  std::vector<RotatedBox3D> out;
  if (s.agents.empty()) return out;
  const Pose world_to_ego = inverse(s.agents.front().gt_pose);
  for (const auto& o : s.world_objects) {
    bool observed = false;
    for (const auto& a : s.agents) {
      observed = observed || (Eigen::Vector2d(o.x, o.y) - a.gt_pose.translation.head<2>()).norm() <= sensing_range;
    }
    if (!observed) continue;
    const RotatedBox3D b = detection::transform_box(world_to_ego, o);
    if (std::abs(b.x) <= half_extent && std::abs(b.y) <= half_extent) out.push_back(b);
  }
  return out;
}

namespace {

nlohmann::ordered_json pose_json(const Pose& p) {
  nlohmann::ordered_json m = nlohmann::ordered_json::array();
  const Eigen::Matrix4d h = p.matrix();
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) m.push_back(h(r, c));
  }
  return m;
}

nlohmann::ordered_json box_json(const RotatedBox3D& b) {
  const auto a = b.as_array();
  return nlohmann::ordered_json(std::vector<double>(a.begin(), a.end()));
}

}  // namespace

void write_scenario(const std::filesystem::path& dir, const Scenario& s) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("write_scenario: cannot create " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json j;
  j["seed"] = s.seed;
  j["objects"] = nlohmann::ordered_json::array();
  for (const auto& o : s.world_objects) j["objects"].push_back(box_json(o));
  j["agents"] = nlohmann::ordered_json::array();
  for (const auto& a : s.agents) {
    nlohmann::ordered_json aj;
    aj["id"] = a.id;
    aj["gt_pose"] = pose_json(a.gt_pose);
    aj["visible"] = a.visible;
    aj["boxes"] = nlohmann::ordered_json::array();
    for (const auto& b : a.boxes) aj["boxes"].push_back(box_json(b));
    aj["frames"] = nlohmann::ordered_json::array();
    for (std::size_t t = 0; t < a.frames.size(); ++t) {
      const std::string name = "agent" + std::to_string(a.id) + "_frame" + std::to_string(t) + ".cpc";
      write_cloud(dir / name, a.frames[t], true);
      aj["frames"].push_back({{"file", name}, {"points", a.frames[t].size()}});
    }
    j["agents"].push_back(aj);
  }
  write_file_bytes(dir / "scenario.json", j.dump(2) + "\n");
}

}  // namespace coopalign::harness
