#pragma once

#include <Eigen/Core>

#include "coopalign/pgc/scene_coord.hpp"

namespace coopalign::pgc {

/// u = ||pred - gt|| under the chosen norm (L1 by default).
double coordinate_error(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt,
                        ErrorNorm norm = ErrorNorm::kL1);

/// Mean over points of u_i + |u_i - eps_i|. Needs gt_world.
double regression_loss(const SceneCoordPrediction& pred, ErrorNorm norm = ErrorNorm::kL1);

/// sigma = 1 / (1 + eps^2). Throws InvalidArgument for negative or NaN eps.
double confidence_from_error(double eps);

}  // namespace coopalign::pgc
