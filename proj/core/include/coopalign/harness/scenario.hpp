#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "coopalign/common/rng.hpp"
#include "coopalign/detection/box.hpp"
#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::harness {

/// Parameters of the synthetic street scene. Vehicles and agents are aligned
/// with the world x axis up to a small yaw jitter.
struct ScenarioConfig {
  int num_agents = 2;
  int num_objects = 12;
  /// Objects inside the sensing range of every agent; all others are then in
  /// range of exactly one agent. Negative leaves visibility unconstrained.
  int co_visible = -1;
  double sensing_range = 30.0;     ///< meters
  double agent_separation = 20.0;  ///< neighbor distance from the ego, meters
  double points_per_m2 = 16.0;     ///< surface sampling density on vehicles
  int ground_points = 1500;
  int clutter_blobs = 20;
  int clutter_points = 300;
  double clutter_max_height = 0.6;
  double min_object_gap = 6.0;  ///< minimum center distance between vehicles
  double yaw_jitter_deg = 5.0;
  bool occlusion = true;
  double box_noise_sigma = 0.05;  ///< meters, applied to shared box centers
  int frames = 1;                 ///< point-cloud sweeps per agent
  int max_retries = 500;          ///< placement attempts per object

  void validate() const;
};

struct ClutterBlob {
  Eigen::Vector2d center;
  double radius = 0.8;
  double height = 0.4;
};

struct AgentView {
  int id = 0;
  Pose gt_pose;                         ///< agent frame -> world
  std::vector<PointCloud> frames;       ///< agent-frame sweeps, oldest first
  std::vector<std::size_t> visible;     ///< indices into world_objects
  std::vector<detection::RotatedBox3D> boxes;  ///< visible boxes, agent frame, with box noise
};

struct Scenario {
  std::uint64_t seed = 0;
  std::vector<AgentView> agents;  ///< agent 0 is the ego
  std::vector<detection::RotatedBox3D> world_objects;
  std::vector<ClutterBlob> clutter;
};

/// Deterministic in `rng`. Throws InfeasibleScenario when objects cannot be
/// placed within the retry budget and ConfigError for invalid parameters.
Scenario generate_scenario(const ScenarioConfig& cfg, Rng& rng);

/// Convenience overload drawing from Rng(seed); records the seed.
Scenario generate_scenario(const ScenarioConfig& cfg, std::uint64_t seed);

/// Objects whose centers lie inside the given ego-frame square and within
/// sensing range of at least one agent, expressed in the ego frame.
std::vector<detection::RotatedBox3D> ego_ground_truth(const Scenario& s, double sensing_range,
                                                      double half_extent);

/// scenario.json (poses, boxes, visibility) plus one binary cloud per agent
/// and frame named agent<i>_frame<t>.cpc.
void write_scenario(const std::filesystem::path& dir, const Scenario& s);

}  // namespace coopalign::harness
