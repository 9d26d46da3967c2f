#pragma once

#include <span>
#include <vector>

#include "coopalign/detection/box.hpp"

namespace coopalign::detection {

enum class ApInterpolation { kAllPoint, kElevenPoint };

struct EvalConfig {
  std::vector<double> iou_thresholds = {0.3, 0.5, 0.7};
  double score_threshold = 0.0;  ///< detections below are discarded before matching
  ApInterpolation interpolation = ApInterpolation::kAllPoint;

  void validate() const;
};

/// Detections and ground truth of one scene.
struct EvalFrame {
  std::vector<Detection> detections;
  std::vector<RotatedBox3D> ground_truth;
};

/// Average precision on one scene. Detections are visited by descending score
/// (ties by index); each is matched to the unmatched ground-truth box of
/// highest IoU when that IoU reaches iou_thr. Empty ground truth yields 1.0
/// without detections and 0.0 with any.
double average_precision(std::span<const Detection> dets, std::span<const RotatedBox3D> gts, double iou_thr,
                         ApInterpolation interp = ApInterpolation::kAllPoint);

/// AP over several scenes, matching within each scene and ranking all
/// detections jointly (ties by scene, then index).
double pooled_average_precision(std::span<const EvalFrame> frames, double iou_thr,
                                ApInterpolation interp = ApInterpolation::kAllPoint);

/// Area under a precision/recall curve given cumulative points ordered by
/// rank; exposed for tests.
double interpolated_area(std::span<const double> recall, std::span<const double> precision, ApInterpolation interp);

}  // namespace coopalign::detection
