#include "coopalign/geometry/cloud_io.hpp"

#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

#include "coopalign/common/binary_io.hpp"
#include "coopalign/common/error.hpp"

namespace coopalign {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

PointCloud parse_cloud_ascii(std::string_view text) {
  PointCloud cloud;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    const std::string_view line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty() || line.front() == '#') continue;

    std::istringstream in{std::string(line)};
    double x = 0.0, y = 0.0, z = 0.0;
    std::string extra;
    if (!(in >> x >> y >> z) || (in >> extra)) {
      throw IoError("ascii cloud: malformed line " + std::to_string(line_no));
    }
    cloud.points.emplace_back(x, y, z);
  }
  cloud.validate();
  return cloud;
}

std::string format_cloud_ascii(const PointCloud& cloud) {
  std::string out = "# x y z (meters)\n";
  char buf[128];
  for (const auto& p : cloud.points) {
    const int n = std::snprintf(buf, sizeof(buf), "%.17g %.17g %.17g\n", p.x(), p.y(), p.z());
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

PointCloud decode_cloud_binary(std::string_view bytes) {
  if (bytes.size() < kPointCloudMagic.size() || bytes.substr(0, kPointCloudMagic.size()) != kPointCloudMagic) {
    throw IoError("binary cloud: missing CPALPC01 header");
  }
  const std::size_t payload = bytes.size() - kPointCloudMagic.size();
  constexpr std::size_t kTriple = 3 * sizeof(float);
  if (payload % kTriple != 0) throw IoError("binary cloud: payload is not a whole number of float triples");
  PointCloud cloud;
  cloud.points.reserve(payload / kTriple);
  for (std::size_t off = kPointCloudMagic.size(); off < bytes.size(); off += kTriple) {
    cloud.points.emplace_back(binary::read_le<float>(bytes, off), binary::read_le<float>(bytes, off + 4),
                              binary::read_le<float>(bytes, off + 8));
  }
  cloud.validate();
  return cloud;
}

std::string encode_cloud_binary(const PointCloud& cloud) {
  std::string out(kPointCloudMagic);
  out.reserve(out.size() + cloud.size() * 3 * sizeof(float));
  for (const auto& p : cloud.points) {
    binary::append_le(out, static_cast<float>(p.x()));
    binary::append_le(out, static_cast<float>(p.y()));
    binary::append_le(out, static_cast<float>(p.z()));
  }
  return out;
}

std::string read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file_bytes(const std::filesystem::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

PointCloud read_cloud(const std::filesystem::path& path) {
  const std::string bytes = read_file_bytes(path);
  if (bytes.rfind(kPointCloudMagic, 0) == 0) return decode_cloud_binary(bytes);
  return parse_cloud_ascii(bytes);
}

void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, bool binary) {
  write_file_bytes(path, binary ? encode_cloud_binary(cloud) : format_cloud_ascii(cloud));
}

}  // namespace coopalign
