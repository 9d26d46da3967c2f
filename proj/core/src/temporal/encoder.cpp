#include "coopalign/temporal/encoder.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include <Eigen/Core>
#include <nlohmann/json.hpp>

#include "coopalign/common/binary_io.hpp"
#include "coopalign/common/error.hpp"
#include "coopalign/common/rng.hpp"
#include "coopalign/geometry/cloud_io.hpp"

namespace coopalign::temporal {

namespace {

using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vec = Eigen::VectorXd;
using CMap = Eigen::Map<const Mat>;
using VMap = Eigen::Map<const Vec>;

std::size_t sz(int n) { return static_cast<std::size_t>(n); }

bool all_zero(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
}

void require_size(const std::vector<double>& v, std::size_t n, const char* what) {
  if (v.size() != n) throw ShapeMismatch(std::string("vit layer: tensor ") + what + " has wrong size");
}

}  // namespace

std::vector<double> temporal_encoding(double t, int dim, EncodingVariant variant) {
  if (dim <= 0 || dim % 2 != 0) throw InvalidArgument("temporal_encoding: dimension must be positive and even");
  if (!(t >= 0.0) || !std::isfinite(t)) throw InvalidArgument("temporal_encoding: time step must be finite and >= 0");
  std::vector<double> e(sz(dim));
  const double d = dim;
  for (int k = 0; 2 * k < dim; ++k) {
    const double even_exp = (2.0 * k) / d;
    const double odd_exp = variant == EncodingVariant::kAsPrinted ? (2.0 * k + 1.0) / d : even_exp;
    e[sz(2 * k)] = std::sin(t / std::pow(10000.0, even_exp));
    e[sz(2 * k + 1)] = std::cos(t / std::pow(10000.0, odd_exp));
  }
  return e;
}

TokenSequence::TokenSequence(int t, int n, int d) : frames(t), tokens_per_frame(n), dim(d) {
  if (t < 0 || n < 0 || d < 0) throw InvalidArgument("TokenSequence: negative extent");
  values.assign(sz(t) * sz(n) * sz(d), 0.0);
}

void TokenSequence::validate() const {
  if (frames < 1 || tokens_per_frame < 1 || dim < 2 || dim % 2 != 0) {
    throw InvalidArgument("TokenSequence: need T, N >= 1 and even D >= 2");
  }
  if (values.size() != sz(frames) * sz(tokens_per_frame) * sz(dim)) throw ShapeMismatch("TokenSequence: storage size");
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidArgument("TokenSequence: non-finite value");
  }
}

namespace {

/// Row/column sinusoid code of a cell, D/4 frequencies per axis.
void add_spatial_code(std::span<double> token, int row, int col) {
  const int dim = static_cast<int>(token.size());
  const int quarter = dim / 4;
  for (int k = 0; k < quarter; ++k) {
    const double w = 1.0 / std::pow(10000.0, (4.0 * k) / dim);
    token[sz(2 * k)] += std::sin(row * w);
    token[sz(2 * k + 1)] += std::cos(row * w);
    token[sz(dim / 2 + 2 * k)] += std::sin(col * w);
    token[sz(dim / 2 + 2 * k + 1)] += std::cos(col * w);
  }
}

}  // namespace

TokenSequence tokenize(std::span<const fusion::BevGrid> frames, const TokenizeOptions& opts) {
  if (frames.empty()) throw InvalidArgument("tokenize: no frames");
  const auto& spec = frames.front().spec;
  const int dim = frames.front().channels;
  if (dim < 2 || dim % 2 != 0) throw ShapeMismatch("tokenize: channel count must be even");
  if (opts.spatial_encoding && dim % 4 != 0) throw ShapeMismatch("tokenize: spatial encoding needs D % 4 == 0");
  for (const auto& g : frames) {
    if (!(g.spec == spec) || g.channels != dim) throw ShapeMismatch("tokenize: frames differ in shape");
    g.validate();
  }
  const int n = static_cast<int>(spec.cells());
  TokenSequence z(static_cast<int>(frames.size()), n, dim);
  for (int t = 0; t < z.frames; ++t) {
    const auto e = temporal_encoding(t + 1, dim, opts.variant);
    const auto& g = frames[sz(t)];
    for (int cell = 0; cell < n; ++cell) {
      for (int d = 0; d < dim; ++d) z.at(t, cell, d) = g.values[sz(d) * spec.cells() + sz(cell)] + e[sz(d)];
      if (opts.spatial_encoding) {
        add_spatial_code(std::span<double>(z.values).subspan(z.offset(t, cell), sz(dim)), cell / spec.width,
                         cell % spec.width);
      }
    }
  }
  return z;
}

fusion::BevGrid embed_grid(const EmbeddingParams& p, const fusion::BevGrid& g) {
  if (g.channels != p.in_channels) {
    throw ShapeMismatch("embed_grid: grid has " + std::to_string(g.channels) + " channels, embedding expects " +
                        std::to_string(p.in_channels));
  }
  if (p.weight.size() != sz(p.dim) * sz(p.in_channels) || p.bias.size() != sz(p.dim)) {
    throw ShapeMismatch("embed_grid: malformed embedding parameters");
  }
  fusion::BevGrid out(g.spec, p.dim);
  const std::size_t cells = g.spec.cells();
  for (int d = 0; d < p.dim; ++d) {
    auto dst = out.plane(d);
    std::fill(dst.begin(), dst.end(), p.bias[sz(d)]);
    for (int c = 0; c < p.in_channels; ++c) {
      const double w = p.weight[sz(d) * sz(p.in_channels) + sz(c)];
      if (w == 0.0) continue;
      const auto src = g.plane(c);
      for (std::size_t i = 0; i < cells; ++i) dst[i] += w * src[i];
    }
  }
  return out;
}

VitLayerParams VitLayerParams::zeros(int dim, int heads, int mlp_hidden) {
  if (dim < 1 || heads < 1 || mlp_hidden < 1 || dim % heads != 0) {
    throw InvalidArgument("vit layer: need D divisible by heads and positive MLP width");
  }
  VitLayerParams p;
  p.dim = dim;
  p.heads = heads;
  p.mlp_hidden = mlp_hidden;
  const std::size_t d = sz(dim), m = sz(mlp_hidden);
  p.ln1_gamma.assign(d, 1.0);
  p.ln2_gamma.assign(d, 1.0);
  p.ln1_beta.assign(d, 0.0);
  p.ln2_beta.assign(d, 0.0);
  for (auto* w : {&p.wq, &p.wk, &p.wv, &p.wo}) w->assign(d * d, 0.0);
  for (auto* b : {&p.bq, &p.bk, &p.bv, &p.bo, &p.b2}) b->assign(d, 0.0);
  p.w1.assign(m * d, 0.0);
  p.b1.assign(m, 0.0);
  p.w2.assign(d * m, 0.0);
  return p;
}

bool VitLayerParams::attention_is_zero() const { return all_zero(wo) && all_zero(bo); }
bool VitLayerParams::mlp_is_zero() const { return all_zero(w2) && all_zero(b2); }

void VitLayerParams::validate() const {
  if (dim < 1 || heads < 1 || mlp_hidden < 1 || dim % heads != 0) {
    throw ShapeMismatch("vit layer: D must be divisible by the head count");
  }
  const std::size_t d = sz(dim), m = sz(mlp_hidden);
  for (const auto* v : {&ln1_gamma, &ln1_beta, &ln2_gamma, &ln2_beta, &bq, &bk, &bv, &bo, &b2}) require_size(*v, d, "[D]");
  for (const auto* v : {&wq, &wk, &wv, &wo}) require_size(*v, d * d, "[D][D]");
  require_size(w1, m * d, "w1");
  require_size(b1, m, "b1");
  require_size(w2, d * m, "w2");
}

namespace {

struct LayerNormCache {
  Mat xhat;
  Vec rstd;
};

Mat layer_norm(const Mat& x, const std::vector<double>& gamma, const std::vector<double>& beta, LayerNormCache& c) {
  const Eigen::Index rows = x.rows(), cols = x.cols();
  c.xhat.resize(rows, cols);
  c.rstd.resize(rows);
  Mat y(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const double mean = x.row(i).mean();
    const double var = (x.row(i).array() - mean).square().mean();
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    c.rstd(i) = rstd;
    for (Eigen::Index j = 0; j < cols; ++j) {
      const double xh = (x(i, j) - mean) * rstd;
      c.xhat(i, j) = xh;
      y(i, j) = xh * gamma[static_cast<std::size_t>(j)] + beta[static_cast<std::size_t>(j)];
    }
  }
  return y;
}

Mat layer_norm_backward(const Mat& dy, const std::vector<double>& gamma, const LayerNormCache& c,
                        std::vector<double>& dgamma, std::vector<double>& dbeta) {
  const Eigen::Index rows = dy.rows(), cols = dy.cols();
  Mat dx(rows, cols);
  Vec dxhat(cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) {
      dgamma[static_cast<std::size_t>(j)] += dy(i, j) * c.xhat(i, j);
      dbeta[static_cast<std::size_t>(j)] += dy(i, j);
      dxhat(j) = dy(i, j) * gamma[static_cast<std::size_t>(j)];
    }
    const double mean_dxhat = dxhat.mean();
    const double mean_dxhat_xhat = dxhat.dot(c.xhat.row(i).transpose()) / static_cast<double>(cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      dx(i, j) = c.rstd(i) * (dxhat(j) - mean_dxhat - c.xhat(i, j) * mean_dxhat_xhat);
    }
  }
  return dx;
}

constexpr double kGeluC = 0.044715;
const double kGeluK = std::sqrt(2.0 / std::numbers::pi);

double gelu(double x) { return 0.5 * x * (1.0 + std::tanh(kGeluK * (x + kGeluC * x * x * x))); }

double gelu_grad(double x) {
  const double th = std::tanh(kGeluK * (x + kGeluC * x * x * x));
  return 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * kGeluK * (1.0 + 3.0 * kGeluC * x * x);
}

Mat affine(const Mat& x, const std::vector<double>& w, const std::vector<double>& b, int out, int in) {
  Mat y = x * CMap(w.data(), out, in).transpose();
  y.rowwise() += VMap(b.data(), out).transpose();
  return y;
}

/// Accumulates weight/bias gradients of y = x W^T + b and returns dx.
Mat affine_backward(const Mat& x, const Mat& dy, const std::vector<double>& w, int out, int in,
                    std::vector<double>& dw, std::vector<double>& db) {
  Eigen::Map<Mat>(dw.data(), out, in) += dy.transpose() * x;
  Eigen::Map<Vec>(db.data(), out) += dy.colwise().sum().transpose();
  return dy * CMap(w.data(), out, in);
}

struct AttentionCache {
  Mat a;  // LN1 output
  LayerNormCache ln;
  Mat q, k, v;
  std::vector<Mat> probs;  // per head, S x S
  Mat o;                   // concatenated head outputs
};

struct MlpCache {
  Mat c;  // LN2 output
  LayerNormCache ln;
  Mat u, g;
};

Mat attention_branch(const VitLayerParams& p, const Mat& z, AttentionCache& cache) {
  const int dh = p.dim / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  cache.a = layer_norm(z, p.ln1_gamma, p.ln1_beta, cache.ln);
  cache.q = affine(cache.a, p.wq, p.bq, p.dim, p.dim);
  cache.k = affine(cache.a, p.wk, p.bk, p.dim, p.dim);
  cache.v = affine(cache.a, p.wv, p.bv, p.dim, p.dim);
  cache.o.setZero(z.rows(), p.dim);
  cache.probs.assign(sz(p.heads), Mat());
  for (int h = 0; h < p.heads; ++h) {
    Mat s = cache.q.middleCols(h * dh, dh) * cache.k.middleCols(h * dh, dh).transpose() * scale;
    for (Eigen::Index i = 0; i < s.rows(); ++i) {
      const double mx = s.row(i).maxCoeff();
      s.row(i) = (s.row(i).array() - mx).exp();
      s.row(i) /= s.row(i).sum();
    }
    cache.o.middleCols(h * dh, dh) = s * cache.v.middleCols(h * dh, dh);
    cache.probs[sz(h)] = std::move(s);
  }
  return affine(cache.o, p.wo, p.bo, p.dim, p.dim);
}

Mat mlp_branch(const VitLayerParams& p, const Mat& z1, MlpCache& cache) {
  cache.c = layer_norm(z1, p.ln2_gamma, p.ln2_beta, cache.ln);
  cache.u = affine(cache.c, p.w1, p.b1, p.mlp_hidden, p.dim);
  cache.g = cache.u.unaryExpr([](double x) { return gelu(x); });
  return affine(cache.g, p.w2, p.b2, p.dim, p.mlp_hidden);
}

void check_layer_input(const VitLayerParams& p, const TokenSequence& z) {
  p.validate();
  if (z.dim != p.dim) {
    throw ShapeMismatch("vit layer: token dimension " + std::to_string(z.dim) + " != layer dimension " +
                        std::to_string(p.dim));
  }
  if (z.values.size() != sz(z.frames) * sz(z.tokens_per_frame) * sz(z.dim)) {
    throw ShapeMismatch("vit layer: token storage size");
  }
}

CMap as_matrix(const TokenSequence& z) { return CMap(z.values.data(), z.length(), z.dim); }

TokenSequence from_matrix(const TokenSequence& shape, const Mat& m) {
  TokenSequence out(shape.frames, shape.tokens_per_frame, shape.dim);
  Eigen::Map<Mat>(out.values.data(), m.rows(), m.cols()) = m;
  return out;
}

}  // namespace

TokenSequence vit_layer_forward(const VitLayerParams& p, const TokenSequence& z) {
  check_layer_input(p, z);
  const bool skip_attn = p.attention_is_zero();
  const bool skip_mlp = p.mlp_is_zero();
  if (skip_attn && skip_mlp) return z;
  Mat x = as_matrix(z);
  if (!skip_attn) {
    AttentionCache ac;
    x += attention_branch(p, x, ac);
  }
  if (!skip_mlp) {
    MlpCache mc;
    x += mlp_branch(p, x, mc);
  }
  return from_matrix(z, x);
}

std::vector<double> vit_attention(const VitLayerParams& p, const TokenSequence& z) {
  check_layer_input(p, z);
  AttentionCache ac;
  attention_branch(p, as_matrix(z), ac);
  const std::size_t s = sz(z.length());
  std::vector<double> out(sz(p.heads) * s * s);
  for (int h = 0; h < p.heads; ++h) {
    Eigen::Map<Mat>(out.data() + sz(h) * s * s, z.length(), z.length()) = ac.probs[sz(h)];
  }
  return out;
}

VitLayerGradients vit_layer_backward(const VitLayerParams& p, const TokenSequence& z, const TokenSequence& upstream) {
  check_layer_input(p, z);
  if (upstream.frames != z.frames || upstream.tokens_per_frame != z.tokens_per_frame || upstream.dim != z.dim) {
    throw ShapeMismatch("vit_layer_backward: upstream gradient shape differs from the input");
  }
  const Mat x = as_matrix(z);
  AttentionCache ac;
  const Mat z1 = x + attention_branch(p, x, ac);
  MlpCache mc;
  mlp_branch(p, z1, mc);

  VitLayerGradients out;
  out.params = VitLayerParams::zeros(p.dim, p.heads, p.mlp_hidden);
  auto& g = out.params;
  std::fill(g.ln1_gamma.begin(), g.ln1_gamma.end(), 0.0);
  std::fill(g.ln2_gamma.begin(), g.ln2_gamma.end(), 0.0);

  const Mat dout = as_matrix(upstream);
  // MLP branch.
  Mat dgelu = affine_backward(mc.g, dout, p.w2, p.dim, p.mlp_hidden, g.w2, g.b2);
  for (Eigen::Index i = 0; i < dgelu.rows(); ++i) {
    for (Eigen::Index j = 0; j < dgelu.cols(); ++j) dgelu(i, j) *= gelu_grad(mc.u(i, j));
  }
  const Mat dc = affine_backward(mc.c, dgelu, p.w1, p.mlp_hidden, p.dim, g.w1, g.b1);
  const Mat dz1 = dout + layer_norm_backward(dc, p.ln2_gamma, mc.ln, g.ln2_gamma, g.ln2_beta);

  // Attention branch.
  const int dh = p.dim / p.heads;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const Mat d_o = affine_backward(ac.o, dz1, p.wo, p.dim, p.dim, g.wo, g.bo);
  Mat dq = Mat::Zero(x.rows(), p.dim), dk = Mat::Zero(x.rows(), p.dim), dv = Mat::Zero(x.rows(), p.dim);
  for (int h = 0; h < p.heads; ++h) {
    const Mat& prob = ac.probs[sz(h)];
    const auto doh = d_o.middleCols(h * dh, dh);
    const Mat dprob = doh * ac.v.middleCols(h * dh, dh).transpose();
    dv.middleCols(h * dh, dh) = prob.transpose() * doh;
    Mat ds = prob.cwiseProduct(dprob);
    const Vec row_dot = ds.rowwise().sum();
    ds -= prob.cwiseProduct(row_dot.replicate(1, prob.cols()));
    ds *= scale;
    dq.middleCols(h * dh, dh) = ds * ac.k.middleCols(h * dh, dh);
    dk.middleCols(h * dh, dh) = ds.transpose() * ac.q.middleCols(h * dh, dh);
  }
  Mat da = affine_backward(ac.a, dq, p.wq, p.dim, p.dim, g.wq, g.bq);
  da += affine_backward(ac.a, dk, p.wk, p.dim, p.dim, g.wk, g.bk);
  da += affine_backward(ac.a, dv, p.wv, p.dim, p.dim, g.wv, g.bv);
  const Mat dz = dz1 + layer_norm_backward(da, p.ln1_gamma, ac.ln, g.ln1_gamma, g.ln1_beta);
  out.input = from_matrix(z, dz);
  return out;
}

void VitConfig::validate() const {
  if (dim < 2 || dim % 2 != 0) throw ConfigError("vit: dim must be even and >= 2");
  if (heads < 1 || dim % heads != 0) throw ConfigError("vit: dim must be divisible by heads");
  if (layers < 0 || mlp_hidden < 1) throw ConfigError("vit: layers >= 0 and mlp_hidden >= 1 required");
  if (tokenize.spatial_encoding && dim % 4 != 0) throw ConfigError("vit: spatial encoding needs dim % 4 == 0");
}

ViTParams ViTParams::zeros(const VitConfig& cfg, int in_channels) {
  cfg.validate();
  if (in_channels < 1) throw ConfigError("vit: in_channels must be positive");
  ViTParams p;
  p.config = cfg;
  p.embedding.in_channels = in_channels;
  p.embedding.dim = cfg.dim;
  p.embedding.weight.assign(sz(cfg.dim) * sz(in_channels), 0.0);
  p.embedding.bias.assign(sz(cfg.dim), 0.0);
  for (int l = 0; l < cfg.layers; ++l) p.layers.push_back(VitLayerParams::zeros(cfg.dim, cfg.heads, cfg.mlp_hidden));
  return p;
}

ViTParams ViTParams::random(const VitConfig& cfg, int in_channels, std::uint64_t seed) {
  ViTParams p = zeros(cfg, in_channels);
  p.seed = seed;
  Rng rng(seed);
  auto fill = [&rng](std::vector<double>& v, double mean, double sd) {
    for (double& x : v) x = rng.normal(mean, sd);
  };
  const double sd_in = 1.0 / std::sqrt(static_cast<double>(in_channels));
  const double sd_d = 1.0 / std::sqrt(static_cast<double>(cfg.dim));
  const double sd_m = 1.0 / std::sqrt(static_cast<double>(cfg.mlp_hidden));
  fill(p.embedding.weight, 0.0, sd_in);
  fill(p.embedding.bias, 0.0, 0.1);
  for (auto& l : p.layers) {
    fill(l.ln1_gamma, 1.0, 0.1);
    fill(l.ln1_beta, 0.0, 0.1);
    fill(l.ln2_gamma, 1.0, 0.1);
    fill(l.ln2_beta, 0.0, 0.1);
    for (auto* w : {&l.wq, &l.wk, &l.wv, &l.wo, &l.w1}) fill(*w, 0.0, sd_d);
    fill(l.w2, 0.0, sd_m);
    for (auto* b : {&l.bq, &l.bk, &l.bv, &l.bo, &l.b1, &l.b2}) fill(*b, 0.0, 0.1);
  }
  return p;
}

std::vector<NamedTensor> ViTParams::tensors() {
  std::vector<NamedTensor> t;
  const int d = config.dim, m = config.mlp_hidden;
  t.push_back({"embedding.weight", {d, embedding.in_channels}, embedding.weight});
  t.push_back({"embedding.bias", {d}, embedding.bias});
  for (std::size_t i = 0; i < layers.size(); ++i) {
    auto& l = layers[i];
    const std::string pre = "layers." + std::to_string(i) + ".";
    t.push_back({pre + "ln1_gamma", {d}, l.ln1_gamma});
    t.push_back({pre + "ln1_beta", {d}, l.ln1_beta});
    t.push_back({pre + "wq", {d, d}, l.wq});
    t.push_back({pre + "bq", {d}, l.bq});
    t.push_back({pre + "wk", {d, d}, l.wk});
    t.push_back({pre + "bk", {d}, l.bk});
    t.push_back({pre + "wv", {d, d}, l.wv});
    t.push_back({pre + "bv", {d}, l.bv});
    t.push_back({pre + "wo", {d, d}, l.wo});
    t.push_back({pre + "bo", {d}, l.bo});
    t.push_back({pre + "ln2_gamma", {d}, l.ln2_gamma});
    t.push_back({pre + "ln2_beta", {d}, l.ln2_beta});
    t.push_back({pre + "w1", {m, d}, l.w1});
    t.push_back({pre + "b1", {m}, l.b1});
    t.push_back({pre + "w2", {d, m}, l.w2});
    t.push_back({pre + "b2", {d}, l.b2});
  }
  return t;
}

void ViTParams::validate() const {
  config.validate();
  if (embedding.dim != config.dim || embedding.in_channels < 1 ||
      embedding.weight.size() != sz(embedding.dim) * sz(embedding.in_channels) ||
      embedding.bias.size() != sz(embedding.dim)) {
    throw ShapeMismatch("vit: malformed embedding");
  }
  if (static_cast<int>(layers.size()) != config.layers) throw ShapeMismatch("vit: layer count differs from config");
  for (const auto& l : layers) {
    l.validate();
    if (l.dim != config.dim || l.heads != config.heads || l.mlp_hidden != config.mlp_hidden) {
      throw ShapeMismatch("vit: layer shape differs from config");
    }
  }
}

namespace {

std::vector<fusion::BevGrid> embed_all(const ViTParams& params, std::span<const fusion::BevGrid> frames) {
  std::vector<fusion::BevGrid> out;
  out.reserve(frames.size());
  for (const auto& f : frames) out.push_back(embed_grid(params.embedding, f));
  return out;
}

}  // namespace

fusion::BevGrid encode(const ViTParams& params, std::span<const fusion::BevGrid> frames) {
  params.validate();
  const auto embedded = embed_all(params, frames);
  TokenSequence z = tokenize(embedded, params.config.tokenize);
  for (const auto& layer : params.layers) z = vit_layer_forward(layer, z);
  const auto& spec = frames.front().spec;
  fusion::BevGrid out(spec, z.dim);
  const int last = z.frames - 1;
  for (int n = 0; n < z.tokens_per_frame; ++n) {
    for (int d = 0; d < z.dim; ++d) out.values[sz(d) * spec.cells() + sz(n)] = z.at(last, n, d);
  }
  return out;
}

ViTParams encode_backward(const ViTParams& params, std::span<const fusion::BevGrid> frames,
                          const fusion::BevGrid& upstream) {
  params.validate();
  const auto embedded = embed_all(params, frames);
  std::vector<TokenSequence> inputs;
  TokenSequence z = tokenize(embedded, params.config.tokenize);
  for (const auto& layer : params.layers) {
    inputs.push_back(z);
    z = vit_layer_forward(layer, z);
  }
  const auto& spec = frames.front().spec;
  if (!(upstream.spec == spec) || upstream.channels != z.dim) {
    throw ShapeMismatch("encode_backward: upstream gradient must be a D-channel grid on the frames' spec");
  }

  ViTParams grads = ViTParams::zeros(params.config, params.embedding.in_channels);
  for (auto& l : grads.layers) {
    std::fill(l.ln1_gamma.begin(), l.ln1_gamma.end(), 0.0);
    std::fill(l.ln2_gamma.begin(), l.ln2_gamma.end(), 0.0);
  }
  TokenSequence dz(z.frames, z.tokens_per_frame, z.dim);
  const int last = z.frames - 1;
  for (int n = 0; n < z.tokens_per_frame; ++n) {
    for (int d = 0; d < z.dim; ++d) dz.at(last, n, d) = upstream.values[sz(d) * spec.cells() + sz(n)];
  }
  for (std::size_t l = params.layers.size(); l-- > 0;) {
    auto g = vit_layer_backward(params.layers[l], inputs[l], dz);
    grads.layers[l] = std::move(g.params);
    dz = std::move(g.input);
  }

  auto& ge = grads.embedding;
  const int cin = params.embedding.in_channels;
  for (int t = 0; t < dz.frames; ++t) {
    const auto& f = frames[sz(t)];
    for (int n = 0; n < dz.tokens_per_frame; ++n) {
      for (int d = 0; d < dz.dim; ++d) {
        const double g = dz.at(t, n, d);
        ge.bias[sz(d)] += g;
        for (int c = 0; c < cin; ++c) ge.weight[sz(d) * sz(cin) + sz(c)] += g * f.values[sz(c) * spec.cells() + sz(n)];
      }
    }
  }
  return grads;
}

namespace {

constexpr const char* kManifestName = "manifest.json";
constexpr const char* kCheckpointFormat = "coopalign-vit-checkpoint";

const char* variant_name(EncodingVariant v) { return v == EncodingVariant::kAsPrinted ? "as_printed" : "classic"; }

}  // namespace

void save_checkpoint(const std::filesystem::path& dir, const ViTParams& params) {
  params.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("save_checkpoint: cannot create " + dir.string() + ": " + ec.message());

  ViTParams copy = params;
  nlohmann::ordered_json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["version"] = 1;
  manifest["seed"] = params.seed;
  manifest["config"] = {{"dim", params.config.dim},
                        {"heads", params.config.heads},
                        {"layers", params.config.layers},
                        {"mlp_hidden", params.config.mlp_hidden},
                        {"in_channels", params.embedding.in_channels},
                        {"temporal_encoding", variant_name(params.config.tokenize.variant)},
                        {"spatial_encoding", params.config.tokenize.spatial_encoding}};
  nlohmann::ordered_json layer_list = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < params.layers.size(); ++i) layer_list.push_back("layers." + std::to_string(i));
  manifest["layers"] = layer_list;
  nlohmann::ordered_json tensors = nlohmann::ordered_json::array();
  for (const auto& t : copy.tensors()) {
    const std::string file = t.name + ".f32";
    std::string bytes;
    bytes.reserve(t.data.size() * 4);
    for (double v : t.data) binary::append_le(bytes, static_cast<float>(v));
    write_file_bytes(dir / file, bytes);
    tensors.push_back({{"name", t.name}, {"shape", t.shape}, {"file", file}});
  }
  manifest["tensors"] = tensors;
  write_file_bytes(dir / kManifestName, manifest.dump(2) + "\n");
}

ViTParams load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(read_file_bytes(dir / kManifestName));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_checkpoint: malformed manifest in " + dir.string() + ": " + e.what());
  }
  try {
    if (manifest.at("format").get<std::string>() != kCheckpointFormat) {
      throw ConfigError("load_checkpoint: unknown format in " + dir.string());
    }
    const auto& c = manifest.at("config");
    VitConfig cfg;
    cfg.dim = c.at("dim").get<int>();
    cfg.heads = c.at("heads").get<int>();
    cfg.layers = c.at("layers").get<int>();
    cfg.mlp_hidden = c.at("mlp_hidden").get<int>();
    const auto variant = c.at("temporal_encoding").get<std::string>();
    if (variant != "as_printed" && variant != "classic") throw ConfigError("load_checkpoint: unknown encoding " + variant);
    cfg.tokenize.variant = variant == "classic" ? EncodingVariant::kClassic : EncodingVariant::kAsPrinted;
    cfg.tokenize.spatial_encoding = c.at("spatial_encoding").get<bool>();
    ViTParams p = ViTParams::zeros(cfg, c.at("in_channels").get<int>());
    p.seed = manifest.at("seed").get<std::uint64_t>();

    const auto& listed = manifest.at("tensors");
    auto slots = p.tensors();
    if (listed.size() != slots.size()) throw ConfigError("load_checkpoint: tensor count does not match config");
    for (std::size_t i = 0; i < slots.size(); ++i) {
      const auto& entry = listed[i];
      if (entry.at("name").get<std::string>() != slots[i].name ||
          entry.at("shape").get<std::vector<int>>() != slots[i].shape) {
        throw ConfigError("load_checkpoint: tensor " + slots[i].name + " missing or misshapen");
      }
      const auto path = dir / entry.at("file").get<std::string>();
      const std::string bytes = read_file_bytes(path);
      if (bytes.size() != slots[i].data.size() * 4) {
        throw IoError("load_checkpoint: " + path.string() + " has " + std::to_string(bytes.size()) + " bytes, expected " +
                      std::to_string(slots[i].data.size() * 4));
      }
      for (std::size_t k = 0; k < slots[i].data.size(); ++k) slots[i].data[k] = binary::read_le<float>(bytes, 4 * k);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("load_checkpoint: malformed manifest in " + dir.string() + ": " + e.what());
  }
}

}  // namespace coopalign::temporal
