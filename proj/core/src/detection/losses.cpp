#include "coopalign/detection/losses.hpp"

#include <algorithm>
#include <cmath>

#include "coopalign/common/error.hpp"

namespace coopalign::detection {

double smooth_l1(double pred, double target) {
  const double d = std::abs(pred - target);
  return d < 1.0 ? 0.5 * d * d : d - 0.5;
}

namespace {

double clamp_probability(double p, int y) {
  if (y != 0 && y != 1) throw InvalidArgument("detection loss: label must be 0 or 1");
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidArgument("detection loss: probability must lie in [0, 1]");
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

}  // namespace

double focal_loss(double p, int y, double alpha, double gamma) {
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(gamma >= 0.0)) {
    throw InvalidArgument("focal_loss: alpha must lie in [0, 1] and gamma be non-negative");
  }
  const double q = clamp_probability(p, y);
  const double pt = y == 1 ? q : 1.0 - q;
  const double at = y == 1 ? alpha : 1.0 - alpha;
  return -at * std::pow(1.0 - pt, gamma) * std::log(pt);
}

double binary_cross_entropy(double p, int y) {
  const double q = clamp_probability(p, y);
  return y == 1 ? -std::log(q) : -std::log(1.0 - q);
}

}  // namespace coopalign::detection
