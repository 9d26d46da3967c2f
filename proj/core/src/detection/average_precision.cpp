#include "coopalign/detection/average_precision.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coopalign/common/error.hpp"
#include "coopalign/detection/iou.hpp"

namespace coopalign::detection {

void EvalConfig::validate() const {
  if (iou_thresholds.empty()) throw ConfigError("eval: at least one IoU threshold required");
  for (double t : iou_thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw ConfigError("eval: IoU thresholds must lie in (0, 1)");
  }
  if (!(score_threshold >= 0.0 && score_threshold <= 1.0)) throw ConfigError("eval: score threshold must lie in [0, 1]");
}

double interpolated_area(std::span<const double> recall, std::span<const double> precision, ApInterpolation interp) {
  if (recall.size() != precision.size()) throw ShapeMismatch("interpolated_area: length mismatch");
  if (recall.empty()) return 0.0;
  if (interp == ApInterpolation::kElevenPoint) {
    double sum = 0.0;
    for (int k = 0; k <= 10; ++k) {
      const double r = k / 10.0;
      double best = 0.0;
      for (std::size_t i = 0; i < recall.size(); ++i) {
        if (recall[i] >= r) best = std::max(best, precision[i]);
      }
      sum += best;
    }
    return sum / 11.0;
  }
  std::vector<double> envelope(precision.begin(), precision.end());
  for (std::size_t i = envelope.size() - 1; i-- > 0;) envelope[i] = std::max(envelope[i], envelope[i + 1]);
  double area = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < recall.size(); ++i) {
    area += (recall[i] - prev_recall) * envelope[i];
    prev_recall = recall[i];
  }
  return area;
}

double pooled_average_precision(std::span<const EvalFrame> frames, double iou_thr, ApInterpolation interp) {
  if (!(iou_thr > 0.0 && iou_thr <= 1.0)) throw InvalidArgument("average_precision: IoU threshold must lie in (0, 1]");
  struct Ranked {
    double score;
    std::size_t frame;
    std::size_t index;
  };
  std::vector<Ranked> ranked;
  std::size_t total_gt = 0;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    total_gt += frames[f].ground_truth.size();
    for (std::size_t i = 0; i < frames[f].detections.size(); ++i) {
      ranked.push_back({frames[f].detections[i].score, f, i});
    }
  }
  if (total_gt == 0) return ranked.empty() ? 1.0 : 0.0;
  std::stable_sort(ranked.begin(), ranked.end(), [](const Ranked& a, const Ranked& b) { return a.score > b.score; });

  std::vector<std::vector<bool>> taken(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) taken[f].assign(frames[f].ground_truth.size(), false);

  std::vector<double> recall, precision;
  recall.reserve(ranked.size());
  precision.reserve(ranked.size());
  std::size_t tp = 0;
  for (std::size_t r = 0; r < ranked.size(); ++r) {
    const auto& frame = frames[ranked[r].frame];
    const auto& det = frame.detections[ranked[r].index];
    double best_iou = -1.0;
    std::size_t best = frame.ground_truth.size();
    for (std::size_t g = 0; g < frame.ground_truth.size(); ++g) {
      if (taken[ranked[r].frame][g]) continue;
      const double iou = rotated_iou_bev(det.box, frame.ground_truth[g]);
      if (iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best < frame.ground_truth.size() && best_iou >= iou_thr) {
      taken[ranked[r].frame][best] = true;
      ++tp;
    }
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gt));
    precision.push_back(static_cast<double>(tp) / static_cast<double>(r + 1));
  }
  return interpolated_area(recall, precision, interp);
}

double average_precision(std::span<const Detection> dets, std::span<const RotatedBox3D> gts, double iou_thr,
                         ApInterpolation interp) {
  const EvalFrame frame{std::vector<Detection>(dets.begin(), dets.end()),
                        std::vector<RotatedBox3D>(gts.begin(), gts.end())};
  return pooled_average_precision(std::span<const EvalFrame>(&frame, 1), iou_thr, interp);
}

}  // namespace coopalign::detection
