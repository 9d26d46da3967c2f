#pragma once

#include <array>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "coopalign/geometry/pose.hpp"

namespace coopalign::detection {

/// Rotated 3D box (x, y, z, h, w, l, theta): center, height, width, length
/// and yaw. Length runs along the heading, width across it.
struct RotatedBox3D {
  double x = 0.0, y = 0.0, z = 0.0;
  double h = 1.0, w = 1.0, l = 1.0;
  double theta = 0.0;

  /// Positive extents, finite values, theta in (-pi, pi].
  void validate() const;
  [[nodiscard]] Eigen::Vector3d center() const { return {x, y, z}; }
  /// Ground-plane footprint corners, counter-clockwise.
  [[nodiscard]] std::array<Eigen::Vector2d, 4> footprint() const;
  [[nodiscard]] double footprint_area() const { return w * l; }
  [[nodiscard]] std::array<double, 7> as_array() const { return {x, y, z, h, w, l, theta}; }
  static RotatedBox3D from_array(const std::array<double, 7>& a);
};

/// Re-expresses a box given in frame A into frame B, where `a_to_b` maps
/// A coordinates to B. Yaw follows the planar heading of the transform.
RotatedBox3D transform_box(const Pose& a_to_b, const RotatedBox3D& box);

struct Detection {
  RotatedBox3D box;
  double score = 0.0;  ///< [0, 1]
};

/// JSON list of 7-float boxes; the "box message" exchanged by box-sharing
/// aligners.
std::string encode_boxes_json(std::span<const RotatedBox3D> boxes);
std::vector<RotatedBox3D> decode_boxes_json(std::string_view json);

/// JSON list of {"box": [7 floats], "score": s}.
std::string encode_detections_json(std::span<const Detection> dets);
std::vector<Detection> decode_detections_json(std::string_view json);

}  // namespace coopalign::detection
