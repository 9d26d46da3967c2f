#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "coopalign/geometry/pose.hpp"

namespace coopalign {

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  /// Optional named per-point scalars; each vector, when present, has one
  /// entry per point.
  std::map<std::string, std::vector<double>> attributes;

  PointCloud() = default;
  explicit PointCloud(std::vector<Eigen::Vector3d> pts) : points(std::move(pts)) {}

  [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
  [[nodiscard]] bool empty() const noexcept { return points.empty(); }

  /// Throws InvalidArgument on non-finite coordinates or ragged attributes.
  void validate() const;
};

/// Maps each point through R·x + t. Attributes are carried over unchanged.
PointCloud transform_points(const Pose& p, const PointCloud& cloud);

}  // namespace coopalign
