#include "coopalign/baselines/spatial_hash.hpp"

#include <cmath>

#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"

namespace coopalign::baselines {

std::size_t SpatialHashGrid::KeyHash::operator()(const Key& k) const noexcept {
  std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k[0]));
  h = splitmix64(h ^ static_cast<std::uint64_t>(k[1]));
  return static_cast<std::size_t>(splitmix64(h ^ static_cast<std::uint64_t>(k[2])));
}

SpatialHashGrid::SpatialHashGrid(std::span<const Eigen::Vector3d> points, double cell)
    : points_(points), cell_(cell) {
  if (!(cell_ > 0.0)) throw InvalidArgument("spatial hash: cell size must be positive");
  buckets_.reserve(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) buckets_[key_of(points[i])].push_back(i);
}

SpatialHashGrid::Key SpatialHashGrid::key_of(const Eigen::Vector3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x() / cell_)),
          static_cast<std::int64_t>(std::floor(p.y() / cell_)),
          static_cast<std::int64_t>(std::floor(p.z() / cell_))};
}

std::optional<SpatialHashGrid::Hit> SpatialHashGrid::nearest(const Eigen::Vector3d& q, double max_dist) const {
  const Key center = key_of(q);
  std::optional<Hit> best;
  double best_sq = max_dist * max_dist;
  for (std::int64_t dx = -1; dx <= 1; ++dx) {
    for (std::int64_t dy = -1; dy <= 1; ++dy) {
      for (std::int64_t dz = -1; dz <= 1; ++dz) {
        const auto it = buckets_.find({center[0] + dx, center[1] + dy, center[2] + dz});
        if (it == buckets_.end()) continue;
        for (std::size_t i : it->second) {
          const double d2 = (points_[i] - q).squaredNorm();
          if (d2 < best_sq || (best && d2 == best_sq && i < best->index)) {
            best_sq = d2;
            best = Hit{i, 0.0};
          }
        }
      }
    }
  }
  if (best) best->distance = std::sqrt(best_sq);
  return best;
}

}  // namespace coopalign::baselines
