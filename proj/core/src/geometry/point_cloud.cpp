#include "coopalign/geometry/point_cloud.hpp"

#include <string>

#include "coopalign/common/error.hpp"

namespace coopalign {

void PointCloud::validate() const {
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw InvalidArgument("point cloud: non-finite coordinate at index " + std::to_string(i));
    }
  }
  for (const auto& [name, values] : attributes) {
    if (values.size() != points.size()) {
      throw InvalidArgument("point cloud: attribute '" + name + "' has " +
                            std::to_string(values.size()) + " entries for " +
                            std::to_string(points.size()) + " points");
    }
  }
}

PointCloud transform_points(const Pose& p, const PointCloud& cloud) {
  PointCloud out;
  out.points.reserve(cloud.size());
  for (const auto& x : cloud.points) out.points.push_back(p.apply(x));
  out.attributes = cloud.attributes;
  return out;
}

}  // namespace coopalign
