#pragma once

#include <numbers>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace coopalign {

/// Rigid transform in SE(3). Applies as x -> rotation * x + translation.
struct Pose {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Pose identity() { return {}; }
  static Pose from_translation(const Eigen::Vector3d& t) { return {Eigen::Matrix3d::Identity(), t}; }
  /// Rotation about +z by `yaw` radians followed by translation.
  static Pose from_yaw(double yaw, const Eigen::Vector3d& t = Eigen::Vector3d::Zero());
  static Pose from_matrix(const Eigen::Matrix4d& m);

  [[nodiscard]] Eigen::Matrix4d matrix() const;
  [[nodiscard]] Eigen::Vector3d apply(const Eigen::Vector3d& x) const { return rotation * x + translation; }
  /// Heading of the rotated x axis projected onto the ground plane.
  [[nodiscard]] double yaw() const;
};

/// Planar rigid transform; theta is kept in (-pi, pi].
struct Pose2D {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2D() = default;
  Pose2D(double x_, double y_, double theta_);

  [[nodiscard]] Eigen::Vector2d apply(const Eigen::Vector2d& p) const;
};

/// Maps any angle into (-pi, pi]; -pi maps to +pi.
double normalize_angle(double radians);

constexpr double deg2rad(double deg) { return deg * std::numbers::pi / 180.0; }
constexpr double rad2deg(double rad) { return rad * 180.0 / std::numbers::pi; }

/// a ∘ b: applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);

/// Transform taking points expressed in frame j into frame i, given both
/// frames' poses in a shared world frame: inverse(pose_i) ∘ pose_j.
Pose relative(const Pose& pose_i, const Pose& pose_j);

Pose2D compose(const Pose2D& a, const Pose2D& b);
Pose2D inverse(const Pose2D& p);

/// Ground-plane projection (x, y, yaw) of a 3D pose.
Pose2D planar(const Pose& p);

struct PoseError {
  double translation_m = 0.0;
  double rotation_deg = 0.0;
};

/// Translation L2 distance and the geodesic angle of gt.rotation^T * est.rotation.
PoseError pose_error(const Pose& est, const Pose& gt);

}  // namespace coopalign
