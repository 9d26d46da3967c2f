#include "coopalign/geometry/noise.hpp"

#include <cmath>
#include <numbers>

#include "coopalign/common/error.hpp"

namespace coopalign {

void GaussianPoseNoise::validate() const {
  if (!(sigma_t >= 0.0) || !(sigma_r_deg >= 0.0)) {
    throw InvalidArgument("gaussian pose noise: sigmas must be >= 0");
  }
}

Pose perturb_pose(const Pose& p, const GaussianPoseNoise& noise, Rng& rng) {
  noise.validate();
  const double zx = rng.normal();
  const double zy = rng.normal();
  const double zr = rng.normal();
  if (noise.sigma_t == 0.0 && noise.sigma_r_deg == 0.0) return p;

  Pose out = p;
  out.translation.x() += noise.sigma_t * zx;
  out.translation.y() += noise.sigma_t * zy;
  // Yaw perturbation applied in the world frame: R' = Rz(dyaw) * R.
  const double dyaw = deg2rad(noise.sigma_r_deg * zr);
  out.rotation = Eigen::AngleAxisd(dyaw, Eigen::Vector3d::UnitZ()).toRotationMatrix() * p.rotation;
  return out;
}

void StructuredLocNoise::validate() const {
  if (!(inlier_sigma >= 0.0) || !(outlier_scale >= 0.0) || !(bias_amplitude >= 0.0) ||
      !(bias_correlation_length >= 0.0)) {
    throw InvalidArgument("structured noise: scales must be >= 0");
  }
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0)) {
    throw InvalidArgument("structured noise: outlier_fraction must lie in [0, 1]");
  }
  if (bias_amplitude > 0.0 && bias_correlation_length <= 0.0) {
    throw InvalidArgument("structured noise: a bias field needs a positive correlation length");
  }
}

BiasField::BiasField(double amplitude, double correlation_length, Rng& rng, int features)
    : amplitude_(amplitude) {
  if (amplitude_ <= 0.0) return;
  if (correlation_length <= 0.0 || features <= 0) {
    throw InvalidArgument("bias field: correlation length and feature count must be positive");
  }
  const double inv_len = 1.0 / correlation_length;
  frequencies_.reserve(3 * static_cast<std::size_t>(features));
  phases_.reserve(3 * static_cast<std::size_t>(features));
  for (int i = 0; i < 3 * features; ++i) {
    frequencies_.emplace_back(rng.normal(0.0, inv_len), rng.normal(0.0, inv_len),
                              rng.normal(0.0, inv_len));
    phases_.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
  }
}

Eigen::Vector3d BiasField::at(const Eigen::Vector3d& p) const {
  if (!active()) return Eigen::Vector3d::Zero();
  const std::size_t per_axis = frequencies_.size() / 3;
  const double scale = amplitude_ * std::sqrt(2.0 / static_cast<double>(per_axis));
  Eigen::Vector3d b = Eigen::Vector3d::Zero();
  for (int axis = 0; axis < 3; ++axis) {
    double sum = 0.0;
    for (std::size_t k = 0; k < per_axis; ++k) {
      const std::size_t idx = static_cast<std::size_t>(axis) * per_axis + k;
      sum += std::cos(frequencies_[idx].dot(p) + phases_[idx]);
    }
    b[axis] = scale * sum;
  }
  return b;
}

StructuredSample sample_structured(const StructuredLocNoise& noise, const BiasField& bias,
                                   const Eigen::Vector3d& world_point, Rng& rng) {
  StructuredSample s;
  const double u = rng.uniform();
  s.outlier = u < noise.outlier_fraction;
  if (s.outlier) {
    const double r = noise.outlier_scale;
    s.offset = {rng.uniform(-r, r), rng.uniform(-r, r), rng.uniform(-r, r)};
  } else if (noise.inlier_sigma > 0.0) {
    s.offset = {rng.normal(0.0, noise.inlier_sigma), rng.normal(0.0, noise.inlier_sigma),
                rng.normal(0.0, noise.inlier_sigma)};
  } else {
    s.offset.setZero();
  }
  s.offset += bias.at(world_point);
  return s;
}

}  // namespace coopalign
