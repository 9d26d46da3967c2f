#include "coopalign/detection/iou.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace coopalign::detection {

namespace {

using Poly = std::vector<Eigen::Vector2d>;

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b) { return a.x() * b.y() - a.y() * b.x(); }

double shoelace(const Poly& p) {
  double twice = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) twice += cross(p[i], p[(i + 1) % p.size()]);
  return 0.5 * std::abs(twice);
}

/// Sutherland-Hodgman: keeps the part of `subject` left of the directed edge a->b.
Poly clip(const Poly& subject, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  Poly out;
  const Eigen::Vector2d e = b - a;
  auto side = [&](const Eigen::Vector2d& p) { return cross(e, p - a); };
  for (std::size_t i = 0; i < subject.size(); ++i) {
    const Eigen::Vector2d& cur = subject[i];
    const Eigen::Vector2d& nxt = subject[(i + 1) % subject.size()];
    const double sc = side(cur);
    const double sn = side(nxt);
    if (sc >= 0.0) out.push_back(cur);
    if ((sc >= 0.0) != (sn >= 0.0)) {
      const double t = sc / (sc - sn);
      out.push_back(cur + t * (nxt - cur));
    }
  }
  return out;
}

double overlap_1d(double ca, double ea, double cb, double eb) {
  return std::max(0.0, std::min(ca + 0.5 * ea, cb + 0.5 * eb) - std::max(ca - 0.5 * ea, cb - 0.5 * eb));
}

}  // namespace

double footprint_intersection_area(const RotatedBox3D& a, const RotatedBox3D& b) {
  a.validate();
  b.validate();
  if (a.theta == 0.0 && b.theta == 0.0) return overlap_1d(a.x, a.l, b.x, b.l) * overlap_1d(a.y, a.w, b.y, b.w);
  const auto fa = a.footprint();
  const auto fb = b.footprint();
  Poly poly(fa.begin(), fa.end());
  for (std::size_t k = 0; k < 4 && !poly.empty(); ++k) poly = clip(poly, fb[k], fb[(k + 1) % 4]);
  return poly.size() < 3 ? 0.0 : shoelace(poly);
}

double rotated_iou_bev(const RotatedBox3D& a, const RotatedBox3D& b) {
  const double inter = footprint_intersection_area(a, b);
  const double uni = a.footprint_area() + b.footprint_area() - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

}  // namespace coopalign::detection
