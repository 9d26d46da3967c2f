#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "coopalign/fusion/bev_grid.hpp"

namespace coopalign::temporal {

/// kAsPrinted: E[2k] = sin(t / 10000^(2k/D)), E[2k+1] = cos(t / 10000^((2k+1)/D)).
/// kClassic pairs sin and cos on the same frequency 10000^(2k/D).
enum class EncodingVariant { kAsPrinted, kClassic };

/// Sinusoidal temporal encoding of time step t. Throws for odd or
/// non-positive D and negative t.
std::vector<double> temporal_encoding(double t, int dim, EncodingVariant variant = EncodingVariant::kAsPrinted);

/// T x N x D tokens stored frame-major, then token, then feature.
struct TokenSequence {
  int frames = 0;
  int tokens_per_frame = 0;
  int dim = 0;
  std::vector<double> values;

  TokenSequence() = default;
  TokenSequence(int t, int n, int d);

  [[nodiscard]] int length() const { return frames * tokens_per_frame; }
  [[nodiscard]] double& at(int t, int n, int d) { return values[offset(t, n) + static_cast<std::size_t>(d)]; }
  [[nodiscard]] double at(int t, int n, int d) const { return values[offset(t, n) + static_cast<std::size_t>(d)]; }
  [[nodiscard]] std::size_t offset(int t, int n) const {
    return (static_cast<std::size_t>(t) * static_cast<std::size_t>(tokens_per_frame) + static_cast<std::size_t>(n)) *
           static_cast<std::size_t>(dim);
  }
  /// Finite values, even D, storage consistent with the shape.
  void validate() const;
};

struct TokenizeOptions {
  EncodingVariant variant = EncodingVariant::kAsPrinted;
  /// Adds a 2D sinusoidal row/column code to every token (D must be a
  /// multiple of 4). Off by default.
  bool spatial_encoding = false;
};

/// One token per cell per frame; frame k (0-based) is time step k + 1, so the
/// last frame is the most recent. Every grid must have D channels and the
/// same spec.
TokenSequence tokenize(std::span<const fusion::BevGrid> frames, const TokenizeOptions& opts = {});

/// Learned per-cell linear map from grid channels to the token dimension.
struct EmbeddingParams {
  int in_channels = 0;
  int dim = 0;
  std::vector<double> weight;  ///< [dim][in_channels]
  std::vector<double> bias;    ///< [dim]
};

fusion::BevGrid embed_grid(const EmbeddingParams& p, const fusion::BevGrid& g);

/// Pre-norm transformer layer: z' = MSA(LN1(z)) + z; out = MLP(LN2(z')) + z'.
struct VitLayerParams {
  int dim = 0;
  int heads = 1;
  int mlp_hidden = 0;
  std::vector<double> ln1_gamma, ln1_beta, ln2_gamma, ln2_beta;  ///< [dim]
  std::vector<double> wq, wk, wv, wo;                            ///< [dim][dim]
  std::vector<double> bq, bk, bv, bo;                            ///< [dim]
  std::vector<double> w1;                                        ///< [mlp_hidden][dim]
  std::vector<double> b1;                                        ///< [mlp_hidden]
  std::vector<double> w2;                                        ///< [dim][mlp_hidden]
  std::vector<double> b2;                                        ///< [dim]

  /// LayerNorm gains of one, everything else zero: the identity layer.
  static VitLayerParams zeros(int dim, int heads, int mlp_hidden);

  /// True when the attention (resp. MLP) branch output is identically zero.
  [[nodiscard]] bool attention_is_zero() const;
  [[nodiscard]] bool mlp_is_zero() const;
  void validate() const;
};

inline constexpr double kLayerNormEps = 1e-5;

TokenSequence vit_layer_forward(const VitLayerParams& p, const TokenSequence& z);

/// Softmax attention probabilities of the layer on z, laid out
/// [head][query][key].
std::vector<double> vit_attention(const VitLayerParams& p, const TokenSequence& z);

struct VitLayerGradients {
  VitLayerParams params;  ///< same layout as the layer
  TokenSequence input;    ///< dL/dz
};

/// Exact gradients of <upstream, vit_layer_forward(p, z)>.
VitLayerGradients vit_layer_backward(const VitLayerParams& p, const TokenSequence& z, const TokenSequence& upstream);

struct VitConfig {
  int dim = 16;
  int heads = 2;
  int layers = 2;
  int mlp_hidden = 32;
  TokenizeOptions tokenize;

  void validate() const;
};

struct NamedTensor {
  std::string name;
  std::vector<int> shape;
  std::span<double> data;
};

struct ViTParams {
  VitConfig config;
  EmbeddingParams embedding;
  std::vector<VitLayerParams> layers;
  std::uint64_t seed = 0;

  /// Identity layers and a zero embedding.
  static ViTParams zeros(const VitConfig& cfg, int in_channels);
  /// Fan-in scaled normal weights, small random LayerNorm perturbations and
  /// biases, drawn from `seed`.
  static ViTParams random(const VitConfig& cfg, int in_channels, std::uint64_t seed);

  /// Every tensor with a stable name and shape, embedding first.
  std::vector<NamedTensor> tensors();
  void validate() const;
};

/// Embed every frame, tokenize, run the layers and reshape the most recent
/// frame's tokens back into a D-channel grid on the frames' spec.
fusion::BevGrid encode(const ViTParams& params, std::span<const fusion::BevGrid> frames);

/// Parameter gradients of <upstream, encode(params, frames)>; upstream is a
/// D-channel grid on the frames' spec.
ViTParams encode_backward(const ViTParams& params, std::span<const fusion::BevGrid> frames,
                          const fusion::BevGrid& upstream);

/// Checkpoint directory: manifest.json (config, seed, layer list, tensor
/// shapes and files) plus one little-endian float32 file per tensor.
void save_checkpoint(const std::filesystem::path& dir, const ViTParams& params);
/// Values round-trip through float32. Throws IoError or ConfigError on
/// missing files, size mismatches or malformed manifests.
ViTParams load_checkpoint(const std::filesystem::path& dir);

}  // namespace coopalign::temporal
