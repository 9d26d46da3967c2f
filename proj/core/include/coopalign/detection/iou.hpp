#pragma once

#include "coopalign/detection/box.hpp"

namespace coopalign::detection {

/// Intersection-over-union of the two ground-plane footprints. Throws
/// InvalidArgument for non-positive extents.
double rotated_iou_bev(const RotatedBox3D& a, const RotatedBox3D& b);

/// Area of the intersection of two footprints (convex polygon clipping).
double footprint_intersection_area(const RotatedBox3D& a, const RotatedBox3D& b);

}  // namespace coopalign::detection
