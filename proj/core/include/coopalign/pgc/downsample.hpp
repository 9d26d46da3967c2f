#pragma once

#include "coopalign/geometry/point_cloud.hpp"

namespace coopalign::pgc {

/// Redundant-sample downsampling: replaces the points of every occupied
/// voxel by their centroid. Output order follows the first point seen in each
/// voxel. Attributes are averaged the same way. Throws InvalidArgument for a
/// non-positive voxel size.
PointCloud rsd_downsample(const PointCloud& cloud, double voxel);

}  // namespace coopalign::pgc
