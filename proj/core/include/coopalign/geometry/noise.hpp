#pragma once

#include <vector>

#include <Eigen/Core>

#include "coopalign/common/rng.hpp"
#include "coopalign/geometry/pose.hpp"

namespace coopalign {

/// i.i.d. Gaussian pose perturbation, as used for GNSS-style noise sweeps.
struct GaussianPoseNoise {
  double sigma_t = 0.0;      ///< meters, per planar axis
  double sigma_r_deg = 0.0;  ///< degrees, yaw only

  void validate() const;
};

/// Perturbs x and y by N(0, sigma_t^2) and yaw by N(0, sigma_r^2) degrees.
/// z, roll and pitch are left untouched. Draws exactly three normals from
/// `rng` (x, y, yaw) in that order regardless of the sigmas, so runs at
/// different noise levels with equal seeds share the same standard-normal
/// draws.
Pose perturb_pose(const Pose& p, const GaussianPoseNoise& noise, Rng& rng);

/// Heavy-tailed, spatially structured localization error: Gaussian inliers,
/// uniform outliers and a smooth bias field over world position.
struct StructuredLocNoise {
  double inlier_sigma = 0.0;             ///< meters
  double outlier_fraction = 0.0;         ///< [0, 1]
  double outlier_scale = 0.0;            ///< meters, outliers ~ U[-s, s] per axis
  double bias_correlation_length = 0.0;  ///< meters
  double bias_amplitude = 0.0;           ///< meters, per-axis RMS of the bias field

  void validate() const;
  [[nodiscard]] bool is_zero() const {
    return inlier_sigma == 0.0 && outlier_fraction == 0.0 && bias_amplitude == 0.0;
  }
};

/// Smooth random vector field b: R^3 -> R^3 with squared-exponential
/// correlation of the given length, realised by random Fourier features.
class BiasField {
 public:
  BiasField() = default;
  BiasField(double amplitude, double correlation_length, Rng& rng, int features = 64);

  [[nodiscard]] Eigen::Vector3d at(const Eigen::Vector3d& p) const;
  [[nodiscard]] bool active() const noexcept { return amplitude_ > 0.0; }

 private:
  double amplitude_ = 0.0;
  std::vector<Eigen::Vector3d> frequencies_;  // 3 * features entries, axis-major
  std::vector<double> phases_;  // 3 * features entries, axis-major
};

/// One draw of the structured per-point error.
struct StructuredSample {
  Eigen::Vector3d offset;
  bool outlier = false;
};

StructuredSample sample_structured(const StructuredLocNoise& noise, const BiasField& bias,
                                   const Eigen::Vector3d& world_point, Rng& rng);

}  // namespace coopalign
