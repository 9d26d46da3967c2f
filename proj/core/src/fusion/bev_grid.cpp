#include "coopalign/fusion/bev_grid.hpp"

#include <cmath>
#include <cstdint>

#include "coopalign/common/binary_io.hpp"
#include "coopalign/common/error.hpp"

namespace coopalign::fusion {

GridSpec GridSpec::centered(int width, int height, double resolution) {
  GridSpec s;
  s.width = width;
  s.height = height;
  s.resolution = resolution;
  s.origin = {-0.5 * (width - 1) * resolution, -0.5 * (height - 1) * resolution};
  return s;
}

void GridSpec::validate() const {
  if (width <= 0 || height <= 0 || !(resolution > 0.0) || !origin.allFinite()) {
    throw InvalidArgument("grid spec: dimensions and resolution must be positive");
  }
}

BevGrid::BevGrid(const GridSpec& s, int c) : spec(s), channels(c) {
  spec.validate();
  if (c < 1) throw InvalidArgument("bev grid: need at least one channel");
  values.assign(static_cast<std::size_t>(c) * spec.cells(), 0.0);
}

void BevGrid::validate() const {
  spec.validate();
  if (channels < 1) throw InvalidArgument("bev grid: need at least one channel");
  if (values.size() != static_cast<std::size_t>(channels) * spec.cells()) {
    throw ShapeMismatch("bev grid: storage does not match H x W x C");
  }
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("bev grid: non-finite value");
  }
}

std::string encode_bev_grid(const BevGrid& g) {
  g.validate();
  std::string out(kBevGridMagic);
  out.reserve(kBevGridHeaderBytes + g.values.size() * sizeof(float));
  binary::append_le<std::int32_t>(out, g.spec.height);
  binary::append_le<std::int32_t>(out, g.spec.width);
  binary::append_le<std::int32_t>(out, g.channels);
  binary::append_le<double>(out, g.spec.resolution);
  binary::append_le<double>(out, g.spec.origin.x());
  binary::append_le<double>(out, g.spec.origin.y());
  for (double v : g.values) binary::append_le<float>(out, static_cast<float>(v));
  return out;
}

BevGrid decode_bev_grid(std::string_view bytes) {
  if (bytes.size() < kBevGridHeaderBytes || bytes.substr(0, kBevGridMagic.size()) != kBevGridMagic) {
    throw IoError("bev grid blob: missing CPALBG01 header");
  }
  GridSpec spec;
  spec.height = binary::read_le<std::int32_t>(bytes, 8);
  spec.width = binary::read_le<std::int32_t>(bytes, 12);
  const int channels = binary::read_le<std::int32_t>(bytes, 16);
  spec.resolution = binary::read_le<double>(bytes, 20);
  spec.origin = {binary::read_le<double>(bytes, 28), binary::read_le<double>(bytes, 36)};
  if (spec.width <= 0 || spec.height <= 0 || channels <= 0) throw IoError("bev grid blob: bad dimensions");
  BevGrid g(spec, channels);
  if (bytes.size() != kBevGridHeaderBytes + g.values.size() * sizeof(float)) {
    throw IoError("bev grid blob: payload size does not match header");
  }
  for (std::size_t k = 0; k < g.values.size(); ++k) {
    g.values[k] = binary::read_le<float>(bytes, kBevGridHeaderBytes + k * sizeof(float));
  }
  return g;
}

}  // namespace coopalign::fusion
