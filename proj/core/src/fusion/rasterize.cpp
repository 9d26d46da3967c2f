#include "coopalign/fusion/rasterize.hpp"

#include <cmath>
#include <limits>

namespace coopalign::fusion {

BevGrid rasterize_bev(const PointCloud& cloud, const GridSpec& spec) {
  BevGrid g(spec, kRasterChannels);
  std::vector<int> counts(spec.cells(), 0);
  std::vector<double> top(spec.cells(), -std::numeric_limits<double>::infinity());

  for (const auto& p : cloud.points) {
    const double fc = std::floor((p.x() - spec.origin.x()) / spec.resolution + 0.5);
    const double fr = std::floor((p.y() - spec.origin.y()) / spec.resolution + 0.5);
    if (fc < 0.0 || fr < 0.0 || fc >= spec.width || fr >= spec.height) continue;
    const std::size_t cell = static_cast<std::size_t>(fr) * static_cast<std::size_t>(spec.width) +
                             static_cast<std::size_t>(fc);
    ++counts[cell];
    if (p.z() > top[cell]) top[cell] = p.z();
  }

  auto occ = g.plane(kOccupancy);
  auto cnt = g.plane(kLogCount);
  auto hgt = g.plane(kMaxHeight);
  for (std::size_t cell = 0; cell < counts.size(); ++cell) {
    if (counts[cell] == 0) continue;
    occ[cell] = 1.0;
    cnt[cell] = std::log1p(static_cast<double>(counts[cell]));
    hgt[cell] = top[cell];
  }
  return g;
}

}  // namespace coopalign::fusion
