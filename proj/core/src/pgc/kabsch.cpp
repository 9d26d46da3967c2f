#include "coopalign/pgc/kabsch.hpp"

#include <algorithm>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "coopalign/common/error.hpp"

namespace coopalign::pgc {

namespace {
// Second principal variance below this fraction of the first is treated as a
// collinear configuration.
constexpr double kCollinearRatio = 1e-10;
}  // namespace

Pose kabsch_solve(std::span<const Eigen::Vector3d> local, std::span<const Eigen::Vector3d> world) {
  if (local.size() != world.size()) throw InvalidArgument("kabsch_solve: correspondence lists differ in length");
  if (local.size() < 3) throw DegenerateSample("kabsch_solve: need at least 3 correspondences");

  const double n = static_cast<double>(local.size());
  Eigen::Vector3d c_local = Eigen::Vector3d::Zero();
  Eigen::Vector3d c_world = Eigen::Vector3d::Zero();
  for (std::size_t k = 0; k < local.size(); ++k) {
    c_local += local[k];
    c_world += world[k];
  }
  c_local /= n;
  c_world /= n;

  Eigen::Matrix3d cov_local = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d cross = Eigen::Matrix3d::Zero();
  for (std::size_t k = 0; k < local.size(); ++k) {
    const Eigen::Vector3d a = local[k] - c_local;
    const Eigen::Vector3d b = world[k] - c_world;
    cov_local.noalias() += a * a.transpose();
    cross.noalias() += a * b.transpose();
  }

  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov_local, Eigen::EigenvaluesOnly);
  const Eigen::Vector3d ev = eig.eigenvalues();  // ascending
  if (!(ev[2] > 0.0) || ev[1] <= kCollinearRatio * ev[2]) {
    throw DegenerateSample("kabsch_solve: collinear or coincident correspondences");
  }

  if (std::equal(local.begin(), local.end(), world.begin())) return Pose::identity();

  const Eigen::JacobiSVD<Eigen::Matrix3d> svd(cross, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix3d& u = svd.matrixU();
  const Eigen::Matrix3d& v = svd.matrixV();
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  if ((v * u.transpose()).determinant() < 0.0) d(2, 2) = -1.0;

  Pose p;
  p.rotation = v * d * u.transpose();
  p.translation = c_world - p.rotation * c_local;
  return p;
}

}  // namespace coopalign::pgc
