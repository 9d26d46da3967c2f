#pragma once

#include <vector>

#include "coopalign/detection/box.hpp"
#include "coopalign/fusion/bev_grid.hpp"

namespace coopalign::detection {

/// Outputs per cell: objectness, then (dx, dy, z, log h, log w, log l, theta).
inline constexpr int kHeadOutputs = 8;

/// Per-cell linear map from C input channels to the head outputs.
struct HeadParams {
  int in_channels = 0;
  std::vector<double> weight;  ///< [kHeadOutputs][in_channels]
  std::vector<double> bias;    ///< [kHeadOutputs]

  static HeadParams zeros(int in_channels);
  void validate() const;
};

struct DecodeConfig {
  double score_threshold = 0.5;  ///< cells must score strictly above this
  double nms_iou = 0.5;
  /// Odd window (rows x cols) averaged around each cell before the linear
  /// map; only in-grid cells count. 1 x 1 disables pooling.
  int pool_rows = 1;
  int pool_cols = 1;

  void validate() const;
};

/// Mean of every channel over a centered window, ignoring cells outside
/// the grid.
fusion::BevGrid box_filter(const fusion::BevGrid& g, int rows, int cols);

/// Score = objectness clamped to [0, 1]; box center = cell center + (dx, dy),
/// extents = exp of the log regressands, theta wrapped into (-pi, pi].
/// Greedy rotated-IoU suppression follows. Throws ShapeMismatch when the grid
/// channel count differs from the head input.
std::vector<Detection> decode_head(const fusion::BevGrid& fused, const HeadParams& params, const DecodeConfig& cfg);

/// Greedy suppression: keep the highest-scoring box (ties by index), drop
/// every remaining box whose IoU with it exceeds iou_thr, repeat.
std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double iou_thr);

}  // namespace coopalign::detection
