#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coopalign/geometry/pose.hpp"
#include "coopalign/pgc/scene_coord.hpp"

namespace coopalign::pgc {

struct RansacConfig {
  int max_iterations = 256;
  double inlier_threshold = 0.5;  ///< meters
  int min_inliers = 10;
  int sample_size = 3;
  double confidence_stop = 0.999;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Pose and confidence of one agent, as produced by the pose generator.
struct PoseEstimate {
  Pose pose;
  double confidence = 0.0;        ///< 1 / (1 + aggregated_error^2)
  double aggregated_error = 0.0;  ///< mean predicted error over inliers, meters
  std::vector<std::size_t> inlier_indices;
  double inlier_ratio = 0.0;
  int iterations = 0;  ///< hypotheses evaluated before stopping
};

/// Hypothesize-and-verify over minimal samples, then a least-squares refit on
/// the winning consensus set. Iteration k draws its sample from the substream
/// (seed, k), so the result does not depend on evaluation order. Returns
/// std::nullopt when the best consensus has fewer than min_inliers members.
std::optional<PoseEstimate> ransac_pose(const SceneCoordPrediction& pred, const RansacConfig& cfg);

/// Fraction of correspondences whose residual under `pose` is below `threshold`.
double inlier_fraction(const SceneCoordPrediction& pred, const Pose& pose, double threshold);

/// Inter-agent pose message: compact JSON
/// {"pose": [12 floats, row-major R|t], "confidence", "aggregated_error", "inlier_ratio"}.
std::string encode_pose_message(const PoseEstimate& est);
/// Inverse of encode_pose_message; inlier_indices are not transmitted.
PoseEstimate decode_pose_message(std::string_view json);

}  // namespace coopalign::pgc
