#include "coopalign/detection/decode_head.hpp"

#include <algorithm>
#include <cmath>

#include "coopalign/common/error.hpp"
#include "coopalign/detection/iou.hpp"

namespace coopalign::detection {

HeadParams HeadParams::zeros(int in_channels) {
  if (in_channels < 1) throw InvalidArgument("decode head: in_channels must be positive");
  HeadParams p;
  p.in_channels = in_channels;
  p.weight.assign(static_cast<std::size_t>(kHeadOutputs * in_channels), 0.0);
  p.bias.assign(kHeadOutputs, 0.0);
  return p;
}

void HeadParams::validate() const {
  if (in_channels < 1 || weight.size() != static_cast<std::size_t>(kHeadOutputs * in_channels) ||
      bias.size() != static_cast<std::size_t>(kHeadOutputs)) {
    throw ShapeMismatch("decode head: malformed parameters");
  }
}

void DecodeConfig::validate() const {
  if (!(score_threshold >= 0.0 && score_threshold < 1.0)) throw ConfigError("decode: score threshold must lie in [0, 1)");
  if (!(nms_iou > 0.0 && nms_iou <= 1.0)) throw ConfigError("decode: nms IoU must lie in (0, 1]");
  if (pool_rows < 1 || pool_cols < 1 || pool_rows % 2 == 0 || pool_cols % 2 == 0) {
    throw ConfigError("decode: pooling window must have odd positive extents");
  }
}

fusion::BevGrid box_filter(const fusion::BevGrid& g, int rows, int cols) {
  if (rows < 1 || cols < 1 || rows % 2 == 0 || cols % 2 == 0) {
    throw InvalidArgument("box_filter: window must have odd positive extents");
  }
  if (rows == 1 && cols == 1) return g;
  const int h = g.spec.height, w = g.spec.width;
  const int hr = rows / 2, hc = cols / 2;
  fusion::BevGrid out(g.spec, g.channels);
  // Summed-area table with a zero border row and column.
  std::vector<double> sat(static_cast<std::size_t>((h + 1) * (w + 1)));
  auto s = [&](int r, int c) -> double& { return sat[static_cast<std::size_t>(r * (w + 1) + c)]; };
  for (int ch = 0; ch < g.channels; ++ch) {
    std::fill(sat.begin(), sat.end(), 0.0);
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) s(r + 1, c + 1) = g.at(ch, r, c) + s(r, c + 1) + s(r + 1, c) - s(r, c);
    }
    for (int r = 0; r < h; ++r) {
      const int r0 = std::max(0, r - hr), r1 = std::min(h, r + hr + 1);
      for (int c = 0; c < w; ++c) {
        const int c0 = std::max(0, c - hc), c1 = std::min(w, c + hc + 1);
        const double sum = s(r1, c1) - s(r0, c1) - s(r1, c0) + s(r0, c0);
        out.at(ch, r, c) = sum / static_cast<double>((r1 - r0) * (c1 - c0));
      }
    }
  }
  return out;
}

std::vector<Detection> non_max_suppression(std::vector<Detection> dets, double iou_thr) {
  std::stable_sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  std::vector<Detection> kept;
  for (const auto& d : dets) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](const Detection& k) { return rotated_iou_bev(k.box, d.box) > iou_thr; });
    if (!suppressed) kept.push_back(d);
  }
  return kept;
}

std::vector<Detection> decode_head(const fusion::BevGrid& fused, const HeadParams& params, const DecodeConfig& cfg) {
  params.validate();
  cfg.validate();
  if (fused.channels != params.in_channels) {
    throw ShapeMismatch("decode head: grid has " + std::to_string(fused.channels) + " channels, head expects " +
                        std::to_string(params.in_channels));
  }
  const fusion::BevGrid pooled = box_filter(fused, cfg.pool_rows, cfg.pool_cols);
  const auto& spec = fused.spec;
  const std::size_t cells = spec.cells();
  const auto cin = static_cast<std::size_t>(params.in_channels);
  std::vector<Detection> raw;
  std::array<double, kHeadOutputs> out{};
  for (int row = 0; row < spec.height; ++row) {
    for (int col = 0; col < spec.width; ++col) {
      const std::size_t cell = static_cast<std::size_t>(row) * static_cast<std::size_t>(spec.width) +
                               static_cast<std::size_t>(col);
      for (std::size_t k = 0; k < kHeadOutputs; ++k) {
        double acc = params.bias[k];
        for (std::size_t c = 0; c < cin; ++c) acc += params.weight[k * cin + c] * pooled.values[c * cells + cell];
        out[k] = acc;
      }
      const double score = std::clamp(out[0], 0.0, 1.0);
      if (!(score > cfg.score_threshold)) continue;
      const Eigen::Vector2d center = spec.cell_center(row, col);
      RotatedBox3D box{center.x() + out[1], center.y() + out[2], out[3],
                       std::exp(out[4]),    std::exp(out[5]),    std::exp(out[6]),
                       normalize_angle(out[7])};
      raw.push_back({box, score});
    }
  }
  return non_max_suppression(std::move(raw), cfg.nms_iou);
}

}  // namespace coopalign::detection
