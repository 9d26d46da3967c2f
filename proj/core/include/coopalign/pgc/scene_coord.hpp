#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "coopalign/common/rng.hpp"
#include "coopalign/geometry/noise.hpp"
#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::pgc {

/// Norm used for the per-point coordinate error u_i. L1 is the default;
/// L2 is kept for sensitivity studies.
enum class ErrorNorm { kL1, kL2 };

/// Output contract of a scene-coordinate regressor: for every local point,
/// its predicted world coordinate and a predicted error magnitude.
struct SceneCoordPrediction {
  PointCloud local_points;
  PointCloud predicted_world;
  std::vector<double> predicted_error;
  std::optional<PointCloud> gt_world;
  /// Oracle diagnostic: 1 where the synthetic error model drew an outlier.
  /// Empty for predictions that did not come from the oracle.
  std::vector<std::uint8_t> outlier_mask;

  [[nodiscard]] std::size_t size() const noexcept { return local_points.size(); }
  /// Equal lengths, non-negative errors, finite coordinates.
  void validate() const;
};

/// Synthetic stand-in for a trained regressor.
struct OracleErrorModel {
  StructuredLocNoise noise;
  /// 1: predicted_error equals the true per-point error. 0: predicted_error is
  /// the model's unconditional mean error, carrying no per-point information.
  double error_prediction_fidelity = 1.0;
  ErrorNorm norm = ErrorNorm::kL1;
  /// Seed of the world-fixed bias field, shared by every agent of a scene.
  std::uint64_t bias_seed = 0;

  void validate() const;
};

/// Unconditional mean of the per-point error under `model` (the value an
/// uninformed error head would output).
double expected_point_error(const OracleErrorModel& model);

/// predicted_world = gt_pose applied to the cloud, plus structured noise.
/// Throws InvalidArgument for an empty cloud.
SceneCoordPrediction oracle_predict(const PointCloud& cloud, const Pose& gt_pose,
                                    const OracleErrorModel& model, Rng& rng);

}  // namespace coopalign::pgc
