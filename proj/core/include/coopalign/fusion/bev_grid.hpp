#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace coopalign::fusion {

/// Geometry of a bird's-eye-view raster. Cell (row, col) is centered at
/// origin + resolution * (col, row) in the grid's own frame.
struct GridSpec {
  int width = 128;
  int height = 128;
  double resolution = 0.5;  ///< meters per cell
  Eigen::Vector2d origin = {-31.75, -31.75};

  /// Grid of the given size whose center lies on the frame origin.
  static GridSpec centered(int width, int height, double resolution);

  void validate() const;
  [[nodiscard]] std::size_t cells() const { return static_cast<std::size_t>(width) * static_cast<std::size_t>(height); }
  [[nodiscard]] Eigen::Vector2d cell_center(int row, int col) const {
    return origin + resolution * Eigen::Vector2d(col, row);
  }
  bool operator==(const GridSpec&) const = default;
};

/// C feature planes of H x W values, stored channel-major then row-major.
struct BevGrid {
  GridSpec spec;
  int channels = 0;
  std::vector<double> values;

  BevGrid() = default;
  BevGrid(const GridSpec& s, int c);

  [[nodiscard]] std::size_t index(int ch, int row, int col) const {
    return (static_cast<std::size_t>(ch) * static_cast<std::size_t>(spec.height) + static_cast<std::size_t>(row)) *
               static_cast<std::size_t>(spec.width) +
           static_cast<std::size_t>(col);
  }
  [[nodiscard]] double& at(int ch, int row, int col) { return values[index(ch, row, col)]; }
  [[nodiscard]] double at(int ch, int row, int col) const { return values[index(ch, row, col)]; }

  [[nodiscard]] std::span<double> plane(int ch) {
    return std::span<double>(values).subspan(static_cast<std::size_t>(ch) * spec.cells(), spec.cells());
  }
  [[nodiscard]] std::span<const double> plane(int ch) const {
    return std::span<const double>(values).subspan(static_cast<std::size_t>(ch) * spec.cells(), spec.cells());
  }

  /// Finite values, at least one channel, storage size consistent with spec.
  void validate() const;
};

/// Binary blob: "CPALBG01", H, W, C as int32 LE, resolution and origin (x, y)
/// as float64 LE, then float32 LE values channel-major, row-major.
inline constexpr std::string_view kBevGridMagic = "CPALBG01";
inline constexpr std::size_t kBevGridHeaderBytes = 8 + 3 * 4 + 3 * 8;

std::string encode_bev_grid(const BevGrid& g);
BevGrid decode_bev_grid(std::string_view bytes);

}  // namespace coopalign::fusion
