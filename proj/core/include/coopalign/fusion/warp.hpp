#pragma once

#include <span>
#include <vector>

#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::fusion {

/// Inverse warp with bilinear sampling: the output cell at position p takes
/// the input value sampled at delta^{-1}(p). Samples outside the grid read 0.
BevGrid warp_grid(const BevGrid& g, const Pose2D& delta);

/// Single-plane variant of warp_grid writing into `out` (resized as needed).
void warp_plane(std::span<const double> in, const GridSpec& spec, const Pose2D& delta, std::vector<double>& out);

}  // namespace coopalign::fusion
