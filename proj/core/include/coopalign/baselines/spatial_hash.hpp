#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

namespace coopalign::baselines {

/// Uniform hash grid over 3D points with cell edge equal to the query radius,
/// so a radius query only inspects the 27 cells around the query point.
class SpatialHashGrid {
 public:
  SpatialHashGrid(std::span<const Eigen::Vector3d> points, double cell);

  struct Hit {
    std::size_t index;
    double distance;
  };

  /// Nearest point strictly closer than `max_dist` (<= cell); ties go to the
  /// lower index.
  [[nodiscard]] std::optional<Hit> nearest(const Eigen::Vector3d& q, double max_dist) const;

 private:
  using Key = std::array<std::int64_t, 3>;
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept;
  };
  [[nodiscard]] Key key_of(const Eigen::Vector3d& p) const;

  std::span<const Eigen::Vector3d> points_;
  double cell_;
  std::unordered_map<Key, std::vector<std::size_t>, KeyHash> buckets_;
};

}  // namespace coopalign::baselines
