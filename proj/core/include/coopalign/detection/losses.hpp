#pragma once

namespace coopalign::detection {

/// Huber-style loss with beta = 1: 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
double smooth_l1(double pred, double target);

inline constexpr double kProbabilityClamp = 1e-7;

/// Binary focal loss -alpha_t (1 - p_t)^gamma log(p_t), with p clamped to
/// [1e-7, 1 - 1e-7]. y must be 0 or 1.
double focal_loss(double p, int y, double alpha = 0.25, double gamma = 2.0);

/// Binary cross-entropy on the same clamped probability.
double binary_cross_entropy(double p, int y);

}  // namespace coopalign::detection
