#include "coopalign/pgc/downsample.hpp"

#include <array>
#include <cmath>
#include <cstdint>
#include <unordered_map>

#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"

namespace coopalign::pgc {

namespace {

using VoxelKey = std::array<std::int64_t, 3>;

struct VoxelKeyHash {
  std::size_t operator()(const VoxelKey& k) const noexcept {
    std::uint64_t h = splitmix64(static_cast<std::uint64_t>(k[0]));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k[1]));
    h = splitmix64(h ^ static_cast<std::uint64_t>(k[2]));
    return static_cast<std::size_t>(h);
  }
};

}  // namespace

PointCloud rsd_downsample(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0)) throw InvalidArgument("rsd_downsample: voxel size must be positive");

  std::unordered_map<VoxelKey, std::size_t, VoxelKeyHash> slot_of;
  std::vector<Eigen::Vector3d> sums;
  std::vector<std::size_t> counts;
  std::vector<std::size_t> members;  // output slot of every input point
  members.reserve(cloud.size());

  for (const auto& p : cloud.points) {
    const VoxelKey key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                       static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    auto [it, inserted] = slot_of.try_emplace(key, sums.size());
    if (inserted) {
      sums.push_back(Eigen::Vector3d::Zero());
      counts.push_back(0);
    }
    sums[it->second] += p;
    ++counts[it->second];
    members.push_back(it->second);
  }

  PointCloud out;
  out.points.reserve(sums.size());
  for (std::size_t s = 0; s < sums.size(); ++s) {
    out.points.push_back(counts[s] == 1 ? sums[s] : Eigen::Vector3d(sums[s] / static_cast<double>(counts[s])));
  }
  for (const auto& [name, values] : cloud.attributes) {
    std::vector<double> acc(sums.size(), 0.0);
    for (std::size_t i = 0; i < values.size(); ++i) acc[members[i]] += values[i];
    for (std::size_t s = 0; s < acc.size(); ++s) acc[s] /= static_cast<double>(counts[s]);
    out.attributes.emplace(name, std::move(acc));
  }
  return out;
}

}  // namespace coopalign::pgc
