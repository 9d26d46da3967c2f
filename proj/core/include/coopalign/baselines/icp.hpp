#pragma once

#include <optional>
#include <vector>

#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::baselines {

struct IcpConfig {
  int max_iterations = 50;
  double convergence_eps = 1e-6;         ///< translation (m) + rotation (rad) change
  double max_correspondence_dist = 5.0;  ///< meters

  void validate() const;
};

struct IcpResult {
  Pose pose;  ///< maps src into dst's frame
  double final_rmse = 0.0;
  int iterations = 0;
  std::vector<double> rmse_history;  ///< one entry per iteration
  bool converged = false;
};

/// Point-to-point ICP. Each iteration pairs every transformed source point
/// with its nearest destination point within max_correspondence_dist, then
/// re-solves the rigid fit on those pairs. Returns std::nullopt when fewer
/// than three correspondences exist in an iteration.
std::optional<IcpResult> icp_align(const PointCloud& src, const PointCloud& dst, const IcpConfig& cfg,
                                   const Pose& initial = Pose::identity());

}  // namespace coopalign::baselines
