#include <benchmark/benchmark.h>

#include "coopalign/common/rng.hpp"
#include "coopalign/detection/iou.hpp"
#include "coopalign/fusion/fsa_oracle.hpp"
#include "coopalign/fusion/warp.hpp"
#include "coopalign/geometry/point_cloud.hpp"
#include "coopalign/pgc/kabsch.hpp"
#include "coopalign/pgc/ransac.hpp"
#include "coopalign/pgc/scene_coord.hpp"
#include "coopalign/temporal/encoder.hpp"

namespace {

using namespace coopalign;

PointCloud random_cloud(Rng& rng, std::size_t n) {
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(-2, 2));
  return c;
}

void BM_Kabsch(benchmark::State& state) {
  Rng rng(1);
  const auto src = random_cloud(rng, static_cast<std::size_t>(state.range(0)));
  const auto dst = transform_points(Pose::from_yaw(0.4, {3, -2, 0.5}), src);
  for (auto _ : state) benchmark::DoNotOptimize(pgc::kabsch_solve(src, dst));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Kabsch)->Arg(3)->Arg(256)->Arg(4096);

void BM_Ransac(benchmark::State& state) {
  Rng rng(2);
  pgc::OracleErrorModel m;
  m.noise.inlier_sigma = 0.02;
  m.noise.outlier_fraction = 0.3;
  m.noise.outlier_scale = 10.0;
  const auto cloud = random_cloud(rng, static_cast<std::size_t>(state.range(0)));
  const auto pred = pgc::oracle_predict(cloud, Pose::from_yaw(1.1, {40, 12, 0}), m, rng);
  pgc::RansacConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(pgc::ransac_pose(pred, cfg));
}
BENCHMARK(BM_Ransac)->Arg(1024)->Arg(8192)->Unit(benchmark::kMillisecond);

fusion::BevGrid random_grid(Rng& rng, int n, int channels) {
  fusion::BevGrid g(fusion::GridSpec::centered(n, n, 0.5), channels);
  for (double& v : g.values) v = rng.uniform(0, 1) > 0.9 ? 1.0 : 0.0;
  return g;
}

void BM_Warp(benchmark::State& state) {
  Rng rng(3);
  const auto g = random_grid(rng, static_cast<int>(state.range(0)), 3);
  const Pose2D d(0.7, -1.3, 0.05);
  for (auto _ : state) benchmark::DoNotOptimize(fusion::warp_grid(g, d));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(g.values.size()));
}
BENCHMARK(BM_Warp)->Arg(64)->Arg(128)->Arg(256);

void BM_FsaOracle(benchmark::State& state) {
  Rng rng(4);
  const auto ego = random_grid(rng, static_cast<int>(state.range(0)), 1);
  const auto nbr = fusion::warp_grid(ego, Pose2D(0.5, 0.25, 0.03));
  fusion::FsaSearch search;
  search.step_xy = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(fusion::fsa_oracle_estimate(ego, nbr, search));
}
BENCHMARK(BM_FsaOracle)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_VitForward(benchmark::State& state) {
  temporal::VitConfig cfg;
  cfg.dim = 16;
  cfg.heads = 4;
  cfg.layers = 2;
  cfg.mlp_hidden = 32;
  const auto params = temporal::ViTParams::random(cfg, 6, 5);
  Rng rng(5);
  const auto n = static_cast<int>(state.range(0));
  std::vector<fusion::BevGrid> frames;
  for (int t = 0; t < 2; ++t) {
    fusion::BevGrid g(fusion::GridSpec::centered(n, n, 1.0), 6);
    for (double& v : g.values) v = rng.normal();
    frames.push_back(std::move(g));
  }
  for (auto _ : state) benchmark::DoNotOptimize(temporal::encode(params, frames));
}
BENCHMARK(BM_VitForward)->Arg(4)->Arg(8)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_RotatedIou(benchmark::State& state) {
  Rng rng(6);
  std::vector<detection::RotatedBox3D> boxes;
  for (int i = 0; i < 256; ++i) {
    boxes.push_back({rng.uniform(-2, 2), rng.uniform(-2, 2), 0, 1.5, rng.uniform(1, 2.5), rng.uniform(3, 5),
                     rng.uniform(-3, 3)});
  }
  std::size_t k = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(detection::rotated_iou_bev(boxes[k % 256], boxes[(k * 7 + 3) % 256]));
    ++k;
  }
}
BENCHMARK(BM_RotatedIou);

}  // namespace

BENCHMARK_MAIN();
