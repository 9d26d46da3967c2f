#pragma once

#include <span>
#include <utility>
#include <vector>

#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::fusion {

/// Residual planar offset (dx, dy, dtheta) between feature grids.
struct OffsetDelta {
  double dx = 0.0;      ///< meters
  double dy = 0.0;      ///< meters
  double dtheta = 0.0;  ///< radians, (-pi, pi]

  [[nodiscard]] Pose2D as_pose() const { return {dx, dy, dtheta}; }
  static OffsetDelta from_pose(const Pose2D& p) { return {p.x, p.y, p.theta}; }
  /// The offset that undoes this one.
  [[nodiscard]] OffsetDelta inverse() const { return from_pose(coopalign::inverse(as_pose())); }
};

/// Warps every neighbor grid (expressed in its own frame, paired with its
/// estimated pose) into the ego frame using the planar part of
/// relative(ego_pose, pose_j). All grids must share one GridSpec.
std::vector<BevGrid> coarse_align(const Pose& ego_pose, std::span<const std::pair<BevGrid, Pose>> neighbors);

/// Appends one constant channel sigma_i / sum_j sigma_j to each grid.
/// Throws InvalidArgument for mismatched lengths, negative sigmas or a zero sum.
std::vector<BevGrid> confidence_embed(std::span<const BevGrid> grids, std::span<const double> sigmas);

/// The normalized weights confidence_embed appends.
std::vector<double> confidence_weights(std::span<const double> sigmas);

/// Warps each grid by its offset.
std::vector<BevGrid> apply_offset(std::span<const BevGrid> grids, std::span<const OffsetDelta> deltas);

}  // namespace coopalign::fusion
