#include "coopalign/geometry/pose.hpp"

#include <algorithm>
#include <cmath>

namespace coopalign {

Pose Pose::from_yaw(double yaw, const Eigen::Vector3d& t) {
  Pose p;
  p.rotation = Eigen::AngleAxisd(yaw, Eigen::Vector3d::UnitZ()).toRotationMatrix();
  p.translation = t;
  return p;
}

Pose Pose::from_matrix(const Eigen::Matrix4d& m) {
  return {m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>()};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation;
  m.topRightCorner<3, 1>() = translation;
  return m;
}

double Pose::yaw() const { return std::atan2(rotation(1, 0), rotation(0, 0)); }

double normalize_angle(double radians) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double r = std::remainder(radians, two_pi);
  if (r <= -std::numbers::pi) r += two_pi;
  return r;
}

Pose2D::Pose2D(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {}

Eigen::Vector2d Pose2D::apply(const Eigen::Vector2d& p) const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  return {c * p.x() - s * p.y() + x, s * p.x() + c * p.y() + y};
}

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

Pose inverse(const Pose& p) {
  const Eigen::Matrix3d rt = p.rotation.transpose();
  return {rt, -(rt * p.translation)};
}

Pose relative(const Pose& pose_i, const Pose& pose_j) { return compose(inverse(pose_i), pose_j); }

Pose2D compose(const Pose2D& a, const Pose2D& b) {
  const Eigen::Vector2d t = a.apply({b.x, b.y});
  return {t.x(), t.y(), a.theta + b.theta};
}

Pose2D inverse(const Pose2D& p) {
  const double c = std::cos(p.theta);
  const double s = std::sin(p.theta);
  return {-(c * p.x + s * p.y), s * p.x - c * p.y, -p.theta};
}

Pose2D planar(const Pose& p) { return {p.translation.x(), p.translation.y(), p.yaw()}; }

PoseError pose_error(const Pose& est, const Pose& gt) {
  PoseError e;
  e.translation_m = (est.translation - gt.translation).norm();
  if (est.rotation == gt.rotation) return e;
  const Eigen::Matrix3d d = gt.rotation.transpose() * est.rotation;
  const Eigen::Vector3d axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  const double sin_part = 0.5 * axis.norm();
  const double cos_part = 0.5 * (d.trace() - 1.0);
  e.rotation_deg = rad2deg(std::atan2(sin_part, std::clamp(cos_part, -1.0, 1.0)));
  return e;
}

}  // namespace coopalign
