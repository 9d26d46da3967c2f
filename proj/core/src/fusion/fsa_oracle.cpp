#include "coopalign/fusion/fsa_oracle.hpp"

#include <cmath>
#include <limits>
#include <vector>

#include "coopalign/common/error.hpp"
#include "coopalign/fusion/warp.hpp"

namespace coopalign::fusion {

void FsaSearch::validate() const {
  if (!(max_dx >= 0.0 && max_dy >= 0.0 && max_dtheta >= 0.0 && step_xy > 0.0 && step_theta > 0.0)) {
    throw InvalidArgument("fsa search: ranges must be >= 0 and steps > 0");
  }
}

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
};

Moments moments(std::span<const double> a) {
  Moments m;
  for (double v : a) {
    m.sum += v;
    m.sum_sq += v * v;
  }
  return m;
}

double variance_term(const Moments& m, double n) { return m.sum_sq - m.sum * m.sum / n; }

std::vector<double> axis_values(double max, double step) {
  const int n = static_cast<int>(std::floor(max / step + 1e-9));
  std::vector<double> v;
  for (int k = -n; k <= n; ++k) v.push_back(k * step);
  return v;
}

}  // namespace

double normalized_cross_correlation(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.empty()) throw ShapeMismatch("ncc: planes differ in size");
  const double n = static_cast<double>(a.size());
  const Moments ma = moments(a);
  const Moments mb = moments(b);
  double cross = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) cross += a[k] * b[k];
  const double va = variance_term(ma, n);
  const double vb = variance_term(mb, n);
  if (!(va > 0.0) || !(vb > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return (cross - ma.sum * mb.sum / n) / std::sqrt(va * vb);
}

OffsetDelta fsa_oracle_estimate(const BevGrid& ego, const BevGrid& nbr, const FsaSearch& search) {
  search.validate();
  if (!(ego.spec == nbr.spec)) throw ShapeMismatch("fsa oracle: grids differ in spec");
  if (search.channel < 0 || search.channel >= ego.channels || search.channel >= nbr.channels) {
    throw ShapeMismatch("fsa oracle: search channel out of range");
  }
  const auto ego_plane = ego.plane(search.channel);
  const auto nbr_plane = nbr.plane(search.channel);
  const double n = static_cast<double>(ego_plane.size());
  const Moments m_nbr = moments(nbr_plane);
  if (!(variance_term(moments(ego_plane), n) > 0.0) || !(variance_term(m_nbr, n) > 0.0)) {
    throw NoSignal("fsa oracle: occupancy has zero variance");
  }
  const double v_nbr = variance_term(m_nbr, n);

  const auto xs = axis_values(search.max_dx, search.step_xy);
  const auto ys = axis_values(search.max_dy, search.step_xy);
  const auto ts = axis_values(search.max_dtheta, search.step_theta);

  OffsetDelta best;
  double best_score = -std::numeric_limits<double>::infinity();
  double best_norm = std::numeric_limits<double>::infinity();
  std::vector<double> warped;
  for (double t : ts) {
    for (double y : ys) {
      for (double x : xs) {
        warp_plane(ego_plane, ego.spec, Pose2D(x, y, t), warped);
        const Moments mw = moments(warped);
        const double vw = variance_term(mw, n);
        if (!(vw > 0.0)) continue;
        double cross = 0.0;
        for (std::size_t k = 0; k < warped.size(); ++k) cross += warped[k] * nbr_plane[k];
        const double score = (cross - mw.sum * m_nbr.sum / n) / std::sqrt(vw * v_nbr);
        const double norm = std::sqrt(x * x + y * y + t * t);
        if (score > best_score || (score == best_score && norm < best_norm)) {
          best_score = score;
          best_norm = norm;
          best = {x, y, t};
        }
      }
    }
  }
  if (!std::isfinite(best_score)) throw NoSignal("fsa oracle: every candidate warped the signal out of view");
  return best;
}

}  // namespace coopalign::fusion
