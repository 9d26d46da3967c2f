#pragma once

#include <array>
#include <span>
#include <vector>

#include "coopalign/common/rng.hpp"
#include "coopalign/fusion/alignment.hpp"
#include "coopalign/fusion/bev_grid.hpp"

namespace coopalign::fusion {

/// Shape of the learnable alignment network: stride-2 convolution stages with
/// tanh, global average pooling, one tanh hidden layer and a linear 3-output
/// head (dx, dy, dtheta).
struct FsaArchitecture {
  int in_channels = 8;  ///< ego channels + neighbor channels
  std::vector<int> conv_channels = {8, 16};
  int kernel = 3;
  int hidden = 32;

  void validate() const;
};

struct ConvLayer {
  int in = 0, out = 0, kernel = 3;
  std::vector<double> weight;  ///< [out][in][kernel][kernel]
  std::vector<double> bias;    ///< [out]
};

struct DenseLayer {
  int in = 0, out = 0;
  std::vector<double> weight;  ///< [out][in]
  std::vector<double> bias;    ///< [out]
};

struct FsaParams {
  FsaArchitecture arch;
  std::vector<ConvLayer> conv;
  DenseLayer hidden;
  DenseLayer head;

  /// All-zero parameters of the given shape.
  static FsaParams zeros(const FsaArchitecture& arch);
  /// Scaled-normal initialisation (fan-in variance 1/fan_in), zero biases.
  static FsaParams random(const FsaArchitecture& arch, Rng& rng);

  /// Every parameter tensor in a fixed order; used by optimizers and
  /// gradient checks.
  std::vector<std::span<double>> tensors();
  std::vector<std::span<const double>> tensors() const;
};

/// Raw network output (dx, dy, dtheta) before angle wrapping.
std::array<double, 3> fsa_forward_raw(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr);

/// Network offset prediction; dtheta is wrapped into (-pi, pi].
OffsetDelta fsa_forward(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr);

struct FsaGradients {
  double loss = 0.0;  ///< 0.5 * ||raw output - target||^2
  FsaParams grads;    ///< same layout as the parameters
};

/// Exact gradients of 0.5 * ||raw output - target||^2 with respect to every
/// parameter.
FsaGradients fsa_backward(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr,
                          const OffsetDelta& target);

}  // namespace coopalign::fusion
