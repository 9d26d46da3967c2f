#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coopalign/detection/box.hpp"
#include "coopalign/detection/decode_head.hpp"
#include "coopalign/fusion/alignment.hpp"
#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/geometry/noise.hpp"
#include "coopalign/harness/comm_ledger.hpp"
#include "coopalign/harness/config.hpp"
#include "coopalign/harness/scenario.hpp"
#include "coopalign/pgc/ransac.hpp"
#include "coopalign/temporal/encoder.hpp"

namespace coopalign::harness {

enum class PoseSource {
  kPgc,          ///< scene-coordinate oracle + RANSAC on each agent's cloud
  kGnss,         ///< ground truth perturbed by Gaussian GNSS noise
  kGroundTruth,  ///< exact poses
};

struct PipelineOptions {
  PoseSource pose_source = PoseSource::kPgc;
  GaussianPoseNoise gnss_noise;
  bool fuse_neighbors = true;        ///< false: ego-only detection
  bool confidence_embedding = true;  ///< false: equal fusion weights
  bool feature_alignment = true;     ///< residual FSA correction
  std::uint64_t seed = 0;            ///< root of every random draw in the run
};

/// What happened to one neighbor in one frame.
struct NeighborTrace {
  int agent = 0;
  int frame = 0;
  bool included = false;
  double confidence = 0.0;
  fusion::OffsetDelta fsa_offset;  ///< estimated residual, zero when FSA is off or found no signal
  bool fsa_applied = false;
};

struct PipelineResult {
  std::vector<detection::Detection> detections;  ///< ego frame
  CommLedger ledger;
  std::vector<NeighborTrace> neighbors;
  /// Per agent, the pose estimate of the most recent frame.
  std::vector<std::optional<pgc::PoseEstimate>> estimates;
  std::vector<bool> ego_localized;  ///< per frame
  fusion::BevGrid encoded;          ///< temporal encoder output of the last frame
};

/// Hand-constructed models of the desk-scale pipeline: an embedding that
/// copies the fused channels into the first token dimensions, identity
/// transformer layers and a head whose objectness rises with the pooled
/// fused maximum height. The temporal code of the most recent frame is
/// cancelled in the head bias.
struct PipelineModels {
  temporal::ViTParams vit;
  detection::HeadParams head;
};

/// Channels of a fused frame: per-cell maximum of the raster channels over
/// agents, then their confidence-weighted sum.
inline constexpr int kFusedChannels = 6;

PipelineModels default_models(const PipelineConfig& cfg, int frames);

/// Fuses ego-frame raster grids (each carrying a trailing confidence channel)
/// into kFusedChannels planes.
fusion::BevGrid fuse_grids(std::span<const fusion::BevGrid> embedded);

/// Full cooperative pipeline on one scenario: pose estimation per agent, rasterization,
/// message exchange, coarse alignment, confidence embedding, FSA correction,
/// temporal encoding over all frames and detection decoding. Failed neighbor
/// poses exclude that neighbor; a failed ego pose reduces the frame to
/// ego-only features.
PipelineResult run_pipeline(const Scenario& scenario, const PipelineConfig& cfg, const PipelineOptions& opts);

/// Pose of one agent in one frame from the PGC stage; exposed for the
/// alignment benchmark. Seeds are derived from (seed, agent, frame).
std::optional<pgc::PoseEstimate> pgc_estimate(const PointCloud& cloud, const Pose& gt_pose,
                                              const PipelineConfig& cfg, std::uint64_t seed, int agent, int frame);

}  // namespace coopalign::harness
