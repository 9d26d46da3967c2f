#include "coopalign/fusion/alignment.hpp"

#include <cmath>

#include "coopalign/common/error.hpp"
#include "coopalign/fusion/warp.hpp"

namespace coopalign::fusion {

std::vector<BevGrid> coarse_align(const Pose& ego_pose, std::span<const std::pair<BevGrid, Pose>> neighbors) {
  std::vector<BevGrid> out;
  out.reserve(neighbors.size());
  for (const auto& [grid, pose] : neighbors) {
    if (!(grid.spec == neighbors.front().first.spec)) throw ShapeMismatch("coarse_align: grids differ in spec");
    out.push_back(warp_grid(grid, planar(relative(ego_pose, pose))));
  }
  return out;
}

std::vector<double> confidence_weights(std::span<const double> sigmas) {
  double total = 0.0;
  for (double s : sigmas) {
    if (!(s >= 0.0) || !std::isfinite(s)) throw InvalidArgument("confidence_embed: sigmas must be finite and >= 0");
    total += s;
  }
  if (!(total > 0.0)) throw InvalidArgument("confidence_embed: all confidences are zero");
  std::vector<double> w;
  w.reserve(sigmas.size());
  for (double s : sigmas) w.push_back(s / total);
  return w;
}

std::vector<BevGrid> confidence_embed(std::span<const BevGrid> grids, std::span<const double> sigmas) {
  if (grids.size() != sigmas.size()) throw InvalidArgument("confidence_embed: one sigma per grid required");
  const auto weights = confidence_weights(sigmas);
  std::vector<BevGrid> out;
  out.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) {
    const BevGrid& g = grids[i];
    BevGrid e(g.spec, g.channels + 1);
    std::copy(g.values.begin(), g.values.end(), e.values.begin());
    auto plane = e.plane(g.channels);
    std::fill(plane.begin(), plane.end(), weights[i]);
    out.push_back(std::move(e));
  }
  return out;
}

std::vector<BevGrid> apply_offset(std::span<const BevGrid> grids, std::span<const OffsetDelta> deltas) {
  if (grids.size() != deltas.size()) throw InvalidArgument("apply_offset: one offset per grid required");
  std::vector<BevGrid> out;
  out.reserve(grids.size());
  for (std::size_t i = 0; i < grids.size(); ++i) out.push_back(warp_grid(grids[i], deltas[i].as_pose()));
  return out;
}

}  // namespace coopalign::fusion
