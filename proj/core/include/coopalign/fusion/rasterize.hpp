#pragma once

#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/geometry/point_cloud.hpp"

namespace coopalign::fusion {

enum RasterChannel : int { kOccupancy = 0, kLogCount = 1, kMaxHeight = 2 };
inline constexpr int kRasterChannels = 3;

/// Deterministic 3-channel feature encoder: occupancy (0/1), log(1 + count)
/// and maximum z per cell. Points falling outside the grid are dropped;
/// empty cells are all zero.
BevGrid rasterize_bev(const PointCloud& cloud, const GridSpec& spec);

}  // namespace coopalign::fusion
