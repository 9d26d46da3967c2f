#include "coopalign/pgc/ransac.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"
#include "coopalign/pgc/kabsch.hpp"
#include "coopalign/pgc/losses.hpp"

namespace coopalign::pgc {

void RansacConfig::validate() const {
  if (sample_size < 3) throw InvalidArgument("ransac: sample_size must be >= 3");
  if (max_iterations <= 0) throw InvalidArgument("ransac: max_iterations must be positive");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("ransac: inlier_threshold must be positive");
  if (min_inliers < 0) throw InvalidArgument("ransac: min_inliers must be >= 0");
  if (!(confidence_stop >= 0.0 && confidence_stop <= 1.0)) {
    throw InvalidArgument("ransac: confidence_stop must lie in [0, 1]");
  }
}

namespace {

struct Consensus {
  std::vector<std::size_t> inliers;
  double mean_residual = std::numeric_limits<double>::infinity();
  Pose pose;
};

Consensus score(const SceneCoordPrediction& pred, const Pose& pose, double threshold) {
  Consensus c;
  c.pose = pose;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double r = (pose.apply(pred.local_points.points[i]) - pred.predicted_world.points[i]).norm();
    if (r < threshold) {
      c.inliers.push_back(i);
      sum += r;
    }
  }
  if (!c.inliers.empty()) c.mean_residual = sum / static_cast<double>(c.inliers.size());
  return c;
}

bool better(const Consensus& a, const Consensus& b) {
  if (a.inliers.size() != b.inliers.size()) return a.inliers.size() > b.inliers.size();
  return a.mean_residual < b.mean_residual;  // equal: the earlier hypothesis stays
}

/// Standard adaptive bound on the number of hypotheses needed to draw one
/// all-inlier sample with probability `confidence`.
double required_iterations(double inlier_ratio, int sample_size, double confidence) {
  if (inlier_ratio <= 0.0) return std::numeric_limits<double>::infinity();
  const double good = std::pow(inlier_ratio, sample_size);
  if (good >= 1.0) return 0.0;
  if (confidence >= 1.0) return std::numeric_limits<double>::infinity();
  return std::log(1.0 - confidence) / std::log(1.0 - good);
}

std::vector<std::size_t> draw_sample(std::size_t n, int k, Rng& rng) {
  std::vector<std::size_t> idx;
  idx.reserve(static_cast<std::size_t>(k));
  while (idx.size() < static_cast<std::size_t>(k)) {
    const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(n) - 1));
    if (std::find(idx.begin(), idx.end(), i) == idx.end()) idx.push_back(i);
  }
  return idx;
}

}  // namespace

std::optional<PoseEstimate> ransac_pose(const SceneCoordPrediction& pred, const RansacConfig& cfg) {
  cfg.validate();
  pred.validate();
  const std::size_t n = pred.size();
  if (n < static_cast<std::size_t>(cfg.sample_size)) {
    throw InvalidArgument("ransac_pose: fewer points than the minimal sample size");
  }

  Consensus best;
  int evaluated = 0;
  std::vector<Eigen::Vector3d> src(static_cast<std::size_t>(cfg.sample_size));
  std::vector<Eigen::Vector3d> dst(static_cast<std::size_t>(cfg.sample_size));
  for (int it = 0; it < cfg.max_iterations; ++it) {
    ++evaluated;
    Rng rng = Rng::substream(cfg.seed, {static_cast<std::uint64_t>(it)});
    const auto sample = draw_sample(n, cfg.sample_size, rng);
    for (std::size_t k = 0; k < sample.size(); ++k) {
      src[k] = pred.local_points.points[sample[k]];
      dst[k] = pred.predicted_world.points[sample[k]];
    }
    Pose hypothesis;
    try {
      hypothesis = kabsch_solve(src, dst);
    } catch (const DegenerateSample&) {
      continue;
    }
    Consensus c = score(pred, hypothesis, cfg.inlier_threshold);
    if (better(c, best)) best = std::move(c);

    const double w = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
    if (static_cast<double>(it + 1) >= required_iterations(w, cfg.sample_size, cfg.confidence_stop)) break;
  }

  if (best.inliers.size() < static_cast<std::size_t>(std::max(cfg.min_inliers, cfg.sample_size))) {
    return std::nullopt;
  }

  PoseEstimate est;
  est.pose = best.pose;
  {
    std::vector<Eigen::Vector3d> a, b;
    a.reserve(best.inliers.size());
    b.reserve(best.inliers.size());
    for (std::size_t i : best.inliers) {
      a.push_back(pred.local_points.points[i]);
      b.push_back(pred.predicted_world.points[i]);
    }
    try {
      est.pose = kabsch_solve(a, b);
    } catch (const DegenerateSample&) {
      // Keep the minimal-sample hypothesis.
    }
  }

  double err = 0.0;
  for (std::size_t i : best.inliers) err += pred.predicted_error[i];
  est.aggregated_error = err / static_cast<double>(best.inliers.size());
  est.confidence = confidence_from_error(est.aggregated_error);
  est.inlier_ratio = static_cast<double>(best.inliers.size()) / static_cast<double>(n);
  est.inlier_indices = std::move(best.inliers);
  est.iterations = evaluated;
  return est;
}

double inlier_fraction(const SceneCoordPrediction& pred, const Pose& pose, double threshold) {
  if (pred.size() == 0) return 0.0;
  return static_cast<double>(score(pred, pose, threshold).inliers.size()) / static_cast<double>(pred.size());
}

std::string encode_pose_message(const PoseEstimate& est) {
  nlohmann::json pose = nlohmann::json::array();
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) pose.push_back(est.pose.rotation(r, c));
    pose.push_back(est.pose.translation[r]);
  }
  nlohmann::json j;
  j["pose"] = std::move(pose);
  j["confidence"] = est.confidence;
  j["aggregated_error"] = est.aggregated_error;
  j["inlier_ratio"] = est.inlier_ratio;
  return j.dump();
}

PoseEstimate decode_pose_message(std::string_view json) {
  PoseEstimate est;
  try {
    const auto j = nlohmann::json::parse(json);
    const auto& pose = j.at("pose");
    if (!pose.is_array() || pose.size() != 12) throw IoError("pose message: 'pose' must hold 12 numbers");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) est.pose.rotation(r, c) = pose.at(static_cast<std::size_t>(4 * r + c)).get<double>();
      est.pose.translation[r] = pose.at(static_cast<std::size_t>(4 * r + 3)).get<double>();
    }
    est.confidence = j.at("confidence").get<double>();
    est.aggregated_error = j.at("aggregated_error").get<double>();
    est.inlier_ratio = j.at("inlier_ratio").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("pose message: ") + e.what());
  }
  return est;
}

}  // namespace coopalign::pgc
