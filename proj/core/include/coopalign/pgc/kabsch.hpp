#pragma once

#include <span>

#include <Eigen/Core>

#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::pgc {

/// Least-squares rigid transform T minimizing sum ||T(local_k) - world_k||^2,
/// reflection-corrected so det(R) = +1. Throws DegenerateSample for fewer than
/// three correspondences or a (near-)collinear local configuration, and
/// InvalidArgument for mismatched lengths.
Pose kabsch_solve(std::span<const Eigen::Vector3d> local, std::span<const Eigen::Vector3d> world);

inline Pose kabsch_solve(const PointCloud& local, const PointCloud& world) {
  return kabsch_solve(std::span<const Eigen::Vector3d>(local.points),
                      std::span<const Eigen::Vector3d>(world.points));
}

}  // namespace coopalign::pgc
