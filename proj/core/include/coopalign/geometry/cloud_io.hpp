#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "coopalign/geometry/point_cloud.hpp"

namespace coopalign {

/// 8-byte header of the binary point-cloud format, followed by consecutive
/// little-endian float32 (x, y, z) triples.
inline constexpr std::string_view kPointCloudMagic = "CPALPC01";

/// ASCII format: one "x y z" per line; blank lines and lines starting with '#'
/// are skipped.
PointCloud parse_cloud_ascii(std::string_view text);
std::string format_cloud_ascii(const PointCloud& cloud);

PointCloud decode_cloud_binary(std::string_view bytes);
std::string encode_cloud_binary(const PointCloud& cloud);

/// Chooses the binary decoder when the file starts with the magic header.
PointCloud read_cloud(const std::filesystem::path& path);
void write_cloud(const std::filesystem::path& path, const PointCloud& cloud, bool binary);

/// Whole-file helpers shared by the other serializers.
std::string read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::string_view bytes);

}  // namespace coopalign
