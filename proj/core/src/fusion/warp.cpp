#include "coopalign/fusion/warp.hpp"

#include <cmath>

namespace coopalign::fusion {

namespace {

// Sampling coordinates within this distance of an integer are snapped, so
// exact cell shifts stay exact.
constexpr double kSnap = 1e-9;

double snap(double u) {
  const double r = std::round(u);
  return std::abs(u - r) < kSnap ? r : u;
}

}  // namespace

void warp_plane(std::span<const double> in, const GridSpec& spec, const Pose2D& delta, std::vector<double>& out) {
  const int w = spec.width;
  const int h = spec.height;
  out.assign(spec.cells(), 0.0);

  // Sample position in cell units: u = R^T k + b with b = (R^T (o - t) - o) / res.
  const double c = std::cos(delta.theta);
  const double s = std::sin(delta.theta);
  const double ox = spec.origin.x() - delta.x;
  const double oy = spec.origin.y() - delta.y;
  const double bx = (c * ox + s * oy - spec.origin.x()) / spec.resolution;
  const double by = (-s * ox + c * oy - spec.origin.y()) / spec.resolution;

  auto sample = [&](int row, int col) -> double {
    if (row < 0 || col < 0 || row >= h || col >= w) return 0.0;
    return in[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col)];
  };

  for (int row = 0; row < h; ++row) {
    for (int col = 0; col < w; ++col) {
      const double u = snap(c * col + s * row + bx);
      const double v = snap(-s * col + c * row + by);
      if (u <= -1.0 || v <= -1.0 || u >= w || v >= h) continue;
      const double u0 = std::floor(u);
      const double v0 = std::floor(v);
      const double fu = u - u0;
      const double fv = v - v0;
      const int iu = static_cast<int>(u0);
      const int iv = static_cast<int>(v0);
      double acc = (1.0 - fu) * (1.0 - fv) * sample(iv, iu);
      if (fu != 0.0) acc += fu * (1.0 - fv) * sample(iv, iu + 1);
      if (fv != 0.0) acc += (1.0 - fu) * fv * sample(iv + 1, iu);
      if (fu != 0.0 && fv != 0.0) acc += fu * fv * sample(iv + 1, iu + 1);
      out[static_cast<std::size_t>(row) * static_cast<std::size_t>(w) + static_cast<std::size_t>(col)] = acc;
    }
  }
}

BevGrid warp_grid(const BevGrid& g, const Pose2D& delta) {
  BevGrid out(g.spec, g.channels);
  std::vector<double> buf;
  for (int ch = 0; ch < g.channels; ++ch) {
    warp_plane(g.plane(ch), g.spec, delta, buf);
    std::copy(buf.begin(), buf.end(), out.plane(ch).begin());
  }
  return out;
}

}  // namespace coopalign::fusion
