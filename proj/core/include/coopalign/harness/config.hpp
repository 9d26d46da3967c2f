#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "coopalign/baselines/graph_match.hpp"
#include "coopalign/baselines/icp.hpp"
#include "coopalign/detection/average_precision.hpp"
#include "coopalign/detection/decode_head.hpp"
#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/fusion/fsa_oracle.hpp"
#include "coopalign/geometry/noise.hpp"
#include "coopalign/harness/scenario.hpp"
#include "coopalign/pgc/ransac.hpp"
#include "coopalign/pgc/scene_coord.hpp"
#include "coopalign/temporal/encoder.hpp"

namespace coopalign::harness {

/// Everything the end-to-end pipeline needs besides the scenario.
struct PipelineConfig {
  fusion::GridSpec grid;
  double downsample_voxel = 0.3;
  pgc::OracleErrorModel oracle;
  pgc::RansacConfig ransac;
  fusion::FsaSearch fsa;
  temporal::VitConfig vit;
  detection::DecodeConfig decode;

  PipelineConfig();
  void validate() const;
};

inline constexpr std::string_view kMethodPgc = "pgc";
inline constexpr std::string_view kMethodIcp = "icp";
inline constexpr std::string_view kMethodGraph = "graph";
inline constexpr std::string_view kMethodGtNoise = "gt-noise";

inline constexpr std::string_view kSweepNoFusion = "no-fusion";
inline constexpr std::string_view kSweepBaseline = "baseline";
inline constexpr std::string_view kSweepPastat = "pastat";

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int scenarios = 20;
  ScenarioConfig scenario;
  /// Co-visible counts evaluated by the alignment benchmark; empty uses
  /// scenario.co_visible only.
  std::vector<int> co_visible_family;
  std::vector<std::string> methods = {"pgc", "icp", "graph", "gt-noise"};
  GaussianPoseNoise align_noise;  ///< GNSS noise of the gt-noise aligner
  std::vector<GaussianPoseNoise> noise_levels;
  std::vector<std::string> sweep_methods = {"no-fusion", "baseline", "pastat"};
  PipelineConfig pipeline;
  baselines::IcpConfig icp;
  baselines::GraphMatchConfig graph;
  detection::EvalConfig eval;
  int timing_repeats = 3;
  int parallel = 1;
  std::filesystem::path out_dir = "out";

  ExperimentConfig();
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Strict JSON reader: unknown keys, wrong types and invalid values raise
/// ConfigError. Missing keys keep their defaults.
ExperimentConfig parse_config(std::string_view json_text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Canonical JSON echo of a configuration (all fields, stable order).
std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace coopalign::harness
