#include "coopalign/pgc/losses.hpp"

#include <cmath>

#include "coopalign/common/error.hpp"

namespace coopalign::pgc {

double coordinate_error(const Eigen::Vector3d& pred, const Eigen::Vector3d& gt, ErrorNorm norm) {
  const Eigen::Vector3d d = pred - gt;
  if (norm == ErrorNorm::kL2) return d.norm();
  return std::abs(d.x()) + std::abs(d.y()) + std::abs(d.z());
}

double regression_loss(const SceneCoordPrediction& pred, ErrorNorm norm) {
  if (!pred.gt_world) throw InvalidArgument("regression_loss: ground-truth world coordinates missing");
  pred.validate();
  if (pred.size() == 0) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double u = coordinate_error(pred.predicted_world.points[i], pred.gt_world->points[i], norm);
    total += u + std::abs(u - pred.predicted_error[i]);
  }
  return total / static_cast<double>(pred.size());
}

double confidence_from_error(double eps) {
  if (!(eps >= 0.0)) throw InvalidArgument("confidence_from_error: error must be >= 0");
  return 1.0 / (1.0 + eps * eps);
}

}  // namespace coopalign::pgc
