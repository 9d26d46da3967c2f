#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"
#include "coopalign/detection/average_precision.hpp"
#include "coopalign/detection/decode_head.hpp"
#include "coopalign/detection/iou.hpp"
#include "coopalign/detection/losses.hpp"
#include "test_support.hpp"

namespace coopalign::detection {
namespace {

RotatedBox3D box2d(double x, double y, double w, double l, double theta = 0.0) {
  return RotatedBox3D{x, y, 0.0, 1.5, w, l, theta};
}

TEST(RotatedIou, ReferenceValues) {
  const auto a = box2d(0, 0, 1, 1);
  EXPECT_NEAR(rotated_iou_bev(a, a), 1.0, 1e-12);
  EXPECT_EQ(rotated_iou_bev(a, box2d(5, 0, 1, 1)), 0.0);
  EXPECT_NEAR(rotated_iou_bev(a, box2d(0.5, 0, 1, 1)), 1.0 / 3.0, 1e-12);
  // A square rotated a quarter turn is the same footprint.
  EXPECT_NEAR(rotated_iou_bev(a, box2d(0, 0, 1, 1, std::numbers::pi / 2)), 1.0, 1e-12);
  // Unit square against the same square at 45 degrees: octagon of area 2(sqrt2 - 1).
  const double octagon = 2.0 * (std::sqrt(2.0) - 1.0);
  EXPECT_NEAR(rotated_iou_bev(a, box2d(0, 0, 1, 1, std::numbers::pi / 4)), octagon / (2.0 - octagon), 1e-12);
  EXPECT_THROW(rotated_iou_bev(a, box2d(0, 0, 0, 1)), InvalidArgument);
}

TEST(RotatedIou, MatchesAxisAlignedIntervals) {
  Rng rng(31);
  for (int k = 0; k < 200; ++k) {
    const double ax = rng.uniform(-2, 2), ay = rng.uniform(-2, 2), aw = rng.uniform(0.5, 3), al = rng.uniform(0.5, 5);
    const double bx = rng.uniform(-2, 2), by = rng.uniform(-2, 2), bw = rng.uniform(0.5, 3), bl = rng.uniform(0.5, 5);
    // theta = 0: length along x, width along y.
    const double ix = std::max(0.0, std::min(ax + al / 2, bx + bl / 2) - std::max(ax - al / 2, bx - bl / 2));
    const double iy = std::max(0.0, std::min(ay + aw / 2, by + bw / 2) - std::max(ay - aw / 2, by - bw / 2));
    const double inter = ix * iy;
    const double want = inter / (aw * al + bw * bl - inter);
    EXPECT_NEAR(rotated_iou_bev(box2d(ax, ay, aw, al), box2d(bx, by, bw, bl)), want, 1e-10);
    EXPECT_NEAR(footprint_intersection_area(box2d(ax, ay, aw, al), box2d(bx, by, bw, bl)), inter, 1e-10);
  }
}

TEST(RotatedIou, SymmetricAndRigidInvariant) {
  Rng rng(32);
  for (int k = 0; k < 200; ++k) {
    const auto a = box2d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 3), rng.uniform(0.5, 5),
                         rng.uniform(-3, 3));
    const auto b = box2d(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(0.5, 3), rng.uniform(0.5, 5),
                         rng.uniform(-3, 3));
    const double iou = rotated_iou_bev(a, b);
    EXPECT_GE(iou, 0.0);
    EXPECT_LE(iou, 1.0 + 1e-12);
    EXPECT_NEAR(iou, rotated_iou_bev(b, a), 1e-12);
    const Pose t = testing::random_planar_pose(rng);
    EXPECT_NEAR(iou, rotated_iou_bev(transform_box(t, a), transform_box(t, b)), 1e-9);
  }
}

std::vector<Detection> dets_at(const std::vector<std::pair<double, double>>& xs_scores) {
  std::vector<Detection> d;
  for (auto [x, s] : xs_scores) d.push_back({box2d(x, 0, 1, 1), s});
  return d;
}

TEST(AveragePrecision, HandWorkedCase) {
  const std::vector<RotatedBox3D> gts{box2d(0, 0, 1, 1), box2d(10, 0, 1, 1), box2d(20, 0, 1, 1)};
  // Ranked: TP, FP, TP, TP. Precision envelope 1, 3/4, 3/4, 3/4 at recall 1/3, 1/3, 2/3, 1.
  const auto dets = dets_at({{0.0, 0.9}, {40.0, 0.8}, {10.0, 0.7}, {20.0, 0.6}});
  EXPECT_NEAR(average_precision(dets, gts, 0.5), 1.0 / 3.0 + 2.0 / 3.0 * 0.75, 1e-12);
  // Eleven-point: recall 0..0.3 -> 1, 0.4..1.0 -> 0.75.
  EXPECT_NEAR(average_precision(dets, gts, 0.5, ApInterpolation::kElevenPoint), (4 * 1.0 + 7 * 0.75) / 11.0, 1e-12);
  // A duplicate of a matched box counts as a false positive.
  const auto dup = dets_at({{0.0, 0.9}, {0.0, 0.8}});
  EXPECT_NEAR(average_precision(dup, gts, 0.5), 1.0 / 3.0, 1e-12);
}

TEST(AveragePrecision, EmptyConventions) {
  const std::vector<RotatedBox3D> none;
  const std::vector<Detection> no_dets;
  EXPECT_EQ(average_precision(no_dets, none, 0.5), 1.0);
  EXPECT_EQ(average_precision(dets_at({{0, 0.5}}), none, 0.5), 0.0);
  EXPECT_EQ(average_precision(no_dets, std::vector<RotatedBox3D>{box2d(0, 0, 1, 1)}, 0.5), 0.0);
}

TEST(AveragePrecision, InvariantUnderMonotoneScoreMaps) {
  Rng rng(33);
  std::vector<RotatedBox3D> gts;
  for (int i = 0; i < 8; ++i) gts.push_back(box2d(5.0 * i, 0, 1, 2));
  std::vector<Detection> dets;
  for (int i = 0; i < 15; ++i) {
    dets.push_back({box2d(5.0 * rng.uniform_int(0, 9) + rng.uniform(-0.5, 0.5), rng.uniform(-0.3, 0.3), 1, 2),
                    rng.uniform(0.01, 0.99)});
  }
  auto mapped = dets;
  for (auto& d : mapped) d.score = d.score * d.score * d.score;
  for (double thr : {0.3, 0.5, 0.7}) {
    const double ap = average_precision(dets, gts, thr);
    EXPECT_GE(ap, 0.0);
    EXPECT_LE(ap, 1.0);
    EXPECT_EQ(ap, average_precision(mapped, gts, thr));
  }
}

TEST(AveragePrecision, PooledEqualsSingleFrameWhenFramesAreFarApart) {
  EvalFrame a{dets_at({{0, 0.9}, {3, 0.4}}), {box2d(0, 0, 1, 1), box2d(6, 0, 1, 1)}};
  EvalFrame b{dets_at({{100, 0.7}, {106, 0.2}}), {box2d(100, 0, 1, 1)}};
  EvalFrame merged = a;
  merged.detections.insert(merged.detections.end(), b.detections.begin(), b.detections.end());
  merged.ground_truth.insert(merged.ground_truth.end(), b.ground_truth.begin(), b.ground_truth.end());
  const std::vector<EvalFrame> frames{a, b};
  EXPECT_NEAR(pooled_average_precision(frames, 0.5), average_precision(merged.detections, merged.ground_truth, 0.5),
              1e-12);
}

TEST(Losses, SmoothL1) {
  EXPECT_EQ(smooth_l1(0.0, 0.0), 0.0);
  EXPECT_NEAR(smooth_l1(0.5, 0.0), 0.125, 1e-15);
  EXPECT_NEAR(smooth_l1(0.0, 3.0), 2.5, 1e-15);
  // Value and slope are continuous at |d| = 1.
  const double e = 1e-7;
  EXPECT_NEAR(smooth_l1(1.0 - e, 0.0), smooth_l1(1.0 + e, 0.0), 3e-7);
  const double left = (smooth_l1(1.0 - e, 0.0) - smooth_l1(1.0 - 2 * e, 0.0)) / e;
  const double right = (smooth_l1(1.0 + 2 * e, 0.0) - smooth_l1(1.0 + e, 0.0)) / e;
  EXPECT_NEAR(left, right, 1e-5);
}

TEST(Losses, FocalReducesToWeightedCrossEntropy) {
  EXPECT_NEAR(binary_cross_entropy(0.9, 1), 0.105361, 1e-6);
  EXPECT_NEAR(focal_loss(0.9, 1, 1.0, 0.0), 0.105361, 1e-6);
  for (double p : {0.01, 0.2, 0.5, 0.77, 0.999}) {
    EXPECT_NEAR(focal_loss(p, 1, 1.0, 0.0), binary_cross_entropy(p, 1), 1e-15);
    EXPECT_NEAR(focal_loss(p, 0, 0.0, 0.0), binary_cross_entropy(p, 0), 1e-15);
    EXPECT_NEAR(binary_cross_entropy(p, 0), -std::log(1.0 - p), 1e-12);
    for (int y : {0, 1}) EXPECT_LE(focal_loss(p, y, 0.25, 2.0), focal_loss(p, y, 0.25, 0.0));
  }
  // Clamping keeps the loss finite at the ends.
  EXPECT_NEAR(binary_cross_entropy(0.0, 1), -std::log(kProbabilityClamp), 1e-9);
  EXPECT_TRUE(std::isfinite(focal_loss(1.0, 0)));
  EXPECT_THROW(focal_loss(0.5, 1, 1.5, 2.0), InvalidArgument);
  EXPECT_THROW(focal_loss(0.5, 1, 0.25, -1.0), InvalidArgument);
}

TEST(DecodeHead, ZeroWeightsDetectNothing) {
  Rng rng(34);
  fusion::BevGrid g(fusion::GridSpec::centered(6, 6, 1.0), 3);
  for (double& v : g.values) v = rng.uniform(-5, 5);
  EXPECT_TRUE(decode_head(g, HeadParams::zeros(3), DecodeConfig{}).empty());
}

TEST(DecodeHead, DecodesConstructedBox) {
  const auto spec = fusion::GridSpec::centered(5, 5, 1.0);
  fusion::BevGrid g(spec, 1);
  g.at(0, 2, 3) = 1.0;
  auto p = HeadParams::zeros(1);
  p.weight[0] = 0.9;
  p.bias = {0.0, 0.2, -0.1, 0.8, std::log(1.6), std::log(1.9), std::log(4.2), 3.5};
  const auto dets = decode_head(g, p, DecodeConfig{});
  ASSERT_EQ(dets.size(), 1u);
  const auto c = spec.cell_center(2, 3);
  EXPECT_NEAR(dets[0].score, 0.9, 1e-15);
  EXPECT_NEAR(dets[0].box.x, c.x() + 0.2, 1e-12);
  EXPECT_NEAR(dets[0].box.y, c.y() - 0.1, 1e-12);
  EXPECT_NEAR(dets[0].box.z, 0.8, 1e-15);
  EXPECT_NEAR(dets[0].box.h, 1.6, 1e-12);
  EXPECT_NEAR(dets[0].box.w, 1.9, 1e-12);
  EXPECT_NEAR(dets[0].box.l, 4.2, 1e-12);
  EXPECT_NEAR(dets[0].box.theta, 3.5 - 2 * std::numbers::pi, 1e-12);
  // Objectness above one is clamped.
  p.weight[0] = 7.0;
  EXPECT_EQ(decode_head(g, p, DecodeConfig{})[0].score, 1.0);
  EXPECT_THROW(decode_head(fusion::BevGrid(spec, 2), p, DecodeConfig{}), ShapeMismatch);
}

TEST(NonMaxSuppression, KeepsBestOfOverlappingPairs) {
  std::vector<Detection> d{{box2d(0, 0, 2, 4), 0.6}, {box2d(0.05, 0, 2, 4), 0.9}, {box2d(1, 0, 2, 4), 0.8},
                           {box2d(30, 0, 2, 4), 0.1}};
  // IoU of the first two is ~0.975; the third overlaps both at 0.6.
  const auto kept = non_max_suppression(d, 0.9);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].score, 0.9);
  EXPECT_EQ(kept[1].score, 0.8);
  EXPECT_EQ(kept[2].score, 0.1);
  EXPECT_EQ(non_max_suppression(d, 0.5).size(), 2u);
  EXPECT_EQ(non_max_suppression(d, 1.0).size(), 4u);
}

TEST(BoxFilter, MatchesBruteForceWindowMean) {
  Rng rng(35);
  fusion::BevGrid g(fusion::GridSpec::centered(7, 5, 1.0), 2);
  for (double& v : g.values) v = rng.uniform(-1, 1);
  const auto f = box_filter(g, 3, 5);
  for (int ch = 0; ch < 2; ++ch) {
    for (int r = 0; r < 5; ++r) {
      for (int c = 0; c < 7; ++c) {
        double sum = 0.0;
        int n = 0;
        for (int dr = -1; dr <= 1; ++dr) {
          for (int dc = -2; dc <= 2; ++dc) {
            if (r + dr < 0 || r + dr >= 5 || c + dc < 0 || c + dc >= 7) continue;
            sum += g.at(ch, r + dr, c + dc);
            ++n;
          }
        }
        EXPECT_NEAR(f.at(ch, r, c), sum / n, 1e-12);
      }
    }
  }
  EXPECT_EQ(box_filter(g, 1, 1).values, g.values);
  EXPECT_THROW(box_filter(g, 2, 1), InvalidArgument);
}

}  // namespace
}  // namespace coopalign::detection
