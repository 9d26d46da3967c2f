#include "coopalign/baselines/icp.hpp"

#include <cmath>

#include "coopalign/baselines/spatial_hash.hpp"
#include "coopalign/common/error.hpp"
#include "coopalign/pgc/kabsch.hpp"

namespace coopalign::baselines {

void IcpConfig::validate() const {
  if (max_iterations <= 0 || !(convergence_eps > 0.0) || !(max_correspondence_dist > 0.0)) {
    throw InvalidArgument("icp: max_iterations, convergence_eps and max_correspondence_dist must be positive");
  }
}

namespace {

double pose_delta(const Pose& a, const Pose& b) {
  const PoseError e = pose_error(a, b);
  return e.translation_m + deg2rad(e.rotation_deg);
}

}  // namespace

std::optional<IcpResult> icp_align(const PointCloud& src, const PointCloud& dst, const IcpConfig& cfg,
                                   const Pose& initial) {
  cfg.validate();
  if (src.empty() || dst.empty()) throw InvalidArgument("icp_align: both clouds must be non-empty");

  const SpatialHashGrid grid(dst.points, cfg.max_correspondence_dist);
  IcpResult result;
  result.pose = initial;

  std::vector<Eigen::Vector3d> a, b;
  a.reserve(src.size());
  b.reserve(src.size());
  for (int it = 1; it <= cfg.max_iterations; ++it) {
    a.clear();
    b.clear();
    for (const auto& p : src.points) {
      if (const auto hit = grid.nearest(result.pose.apply(p), cfg.max_correspondence_dist)) {
        a.push_back(p);
        b.push_back(dst.points[hit->index]);
      }
    }
    if (a.size() < 3) return std::nullopt;

    Pose next;
    try {
      next = pgc::kabsch_solve(a, b);
    } catch (const DegenerateSample&) {
      return std::nullopt;
    }

    double sq = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) sq += (next.apply(a[k]) - b[k]).squaredNorm();
    result.final_rmse = std::sqrt(sq / static_cast<double>(a.size()));
    result.rmse_history.push_back(result.final_rmse);
    result.iterations = it;

    const double delta = pose_delta(next, result.pose);
    result.pose = next;
    if (delta < cfg.convergence_eps) {
      result.converged = true;
      break;
    }
  }
  return result;
}

}  // namespace coopalign::baselines
