#include "coopalign/detection/box.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

#include "coopalign/common/error.hpp"

namespace coopalign::detection {

void RotatedBox3D::validate() const {
  for (double v : as_array()) {
    if (!std::isfinite(v)) throw InvalidArgument("box: non-finite parameter");
  }
  if (!(h > 0.0 && w > 0.0 && l > 0.0)) throw InvalidArgument("box: extents must be positive");
  if (!(theta > -std::numbers::pi && theta <= std::numbers::pi)) {
    throw InvalidArgument("box: theta must lie in (-pi, pi]");
  }
}

std::array<Eigen::Vector2d, 4> RotatedBox3D::footprint() const {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  const double hl = 0.5 * l;
  const double hw = 0.5 * w;
  const std::array<Eigen::Vector2d, 4> local{Eigen::Vector2d(hl, hw), Eigen::Vector2d(-hl, hw),
                                             Eigen::Vector2d(-hl, -hw), Eigen::Vector2d(hl, -hw)};
  std::array<Eigen::Vector2d, 4> out;
  for (std::size_t k = 0; k < 4; ++k) {
    out[k] = {x + c * local[k].x() - s * local[k].y(), y + s * local[k].x() + c * local[k].y()};
  }
  return out;
}

RotatedBox3D RotatedBox3D::from_array(const std::array<double, 7>& a) {
  return {a[0], a[1], a[2], a[3], a[4], a[5], a[6]};
}

RotatedBox3D transform_box(const Pose& a_to_b, const RotatedBox3D& box) {
  const Eigen::Vector3d c = a_to_b.apply(box.center());
  RotatedBox3D out = box;
  out.x = c.x();
  out.y = c.y();
  out.z = c.z();
  out.theta = normalize_angle(box.theta + a_to_b.yaw());
  return out;
}

namespace {

nlohmann::json box_to_json(const RotatedBox3D& b) {
  const auto a = b.as_array();
  return nlohmann::json(std::vector<double>(a.begin(), a.end()));
}

RotatedBox3D box_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 7) throw IoError("box json: expected 7 numbers");
  std::array<double, 7> a{};
  for (std::size_t k = 0; k < 7; ++k) a[k] = j[k].get<double>();
  return RotatedBox3D::from_array(a);
}

}  // namespace

std::string encode_boxes_json(std::span<const RotatedBox3D> boxes) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& b : boxes) j.push_back(box_to_json(b));
  return j.dump();
}

std::vector<RotatedBox3D> decode_boxes_json(std::string_view json) {
  std::vector<RotatedBox3D> out;
  try {
    for (const auto& b : nlohmann::json::parse(json)) out.push_back(box_from_json(b));
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("box json: ") + e.what());
  }
  return out;
}

std::string encode_detections_json(std::span<const Detection> dets) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& d : dets) j.push_back({{"box", box_to_json(d.box)}, {"score", d.score}});
  return j.dump();
}

std::vector<Detection> decode_detections_json(std::string_view json) {
  std::vector<Detection> out;
  try {
    for (const auto& d : nlohmann::json::parse(json)) {
      out.push_back({box_from_json(d.at("box")), d.at("score").get<double>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("detection json: ") + e.what());
  }
  return out;
}

}  // namespace coopalign::detection
