#pragma once

#include "coopalign/fusion/alignment.hpp"
#include "coopalign/fusion/bev_grid.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign::fusion {

/// Discretized 3-DoF search window. Candidates are k * step for integer k with
/// |k * step| <= max on each axis.
struct FsaSearch {
  double max_dx = 2.0;
  double max_dy = 2.0;
  double step_xy = 0.25;
  double max_dtheta = deg2rad(10.0);
  double step_theta = deg2rad(1.0);
  int channel = 0;  ///< plane compared; occupancy by default

  void validate() const;
};

/// Normalized cross-correlation of two equally sized planes; NaN when either
/// has zero variance.
double normalized_cross_correlation(std::span<const double> a, std::span<const double> b);

/// Exhaustive search for the offset d maximizing NCC(warp(ego, d), nbr), i.e.
/// the shift that carries ego features onto the neighbor's. Exact score ties
/// go to the smallest ||(dx, dy, dtheta)||. Throws NoSignal when either plane
/// has zero variance and ShapeMismatch for differing specs.
OffsetDelta fsa_oracle_estimate(const BevGrid& ego, const BevGrid& nbr, const FsaSearch& search);

}  // namespace coopalign::fusion
