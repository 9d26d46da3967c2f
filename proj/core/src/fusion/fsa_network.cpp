#include "coopalign/fusion/fsa_network.hpp"

#include <cmath>

#include "coopalign/common/error.hpp"

namespace coopalign::fusion {

void FsaArchitecture::validate() const {
  if (in_channels < 1 || conv_channels.empty() || kernel < 1 || kernel % 2 == 0 || hidden < 1) {
    throw InvalidArgument("fsa architecture: need >= 1 input channel, >= 1 conv stage, odd kernel, hidden >= 1");
  }
  for (int c : conv_channels) {
    if (c < 1) throw InvalidArgument("fsa architecture: conv widths must be positive");
  }
}

namespace {

constexpr int kStride = 2;
constexpr int kOutputs = 3;

ConvLayer make_conv(int in, int out, int kernel) {
  ConvLayer c;
  c.in = in;
  c.out = out;
  c.kernel = kernel;
  c.weight.assign(static_cast<std::size_t>(out * in * kernel * kernel), 0.0);
  c.bias.assign(static_cast<std::size_t>(out), 0.0);
  return c;
}

DenseLayer make_dense(int in, int out) {
  DenseLayer d;
  d.in = in;
  d.out = out;
  d.weight.assign(static_cast<std::size_t>(out * in), 0.0);
  d.bias.assign(static_cast<std::size_t>(out), 0.0);
  return d;
}

int conv_out(int n, int kernel) { return (n + 2 * (kernel / 2) - kernel) / kStride + 1; }

struct Tensor3 {
  int c = 0, h = 0, w = 0;
  std::vector<double> v;
  Tensor3() = default;
  Tensor3(int c_, int h_, int w_) : c(c_), h(h_), w(w_), v(static_cast<std::size_t>(c_ * h_ * w_), 0.0) {}
  double& at(int ch, int r, int col) { return v[static_cast<std::size_t>((ch * h + r) * w + col)]; }
  double at(int ch, int r, int col) const { return v[static_cast<std::size_t>((ch * h + r) * w + col)]; }
};

Tensor3 conv_forward(const ConvLayer& L, const Tensor3& x) {
  const int pad = L.kernel / 2;
  Tensor3 y(L.out, conv_out(x.h, L.kernel), conv_out(x.w, L.kernel));
  for (int o = 0; o < L.out; ++o) {
    for (int r = 0; r < y.h; ++r) {
      for (int c = 0; c < y.w; ++c) {
        double acc = L.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < L.in; ++i) {
          for (int ky = 0; ky < L.kernel; ++ky) {
            const int iy = kStride * r + ky - pad;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < L.kernel; ++kx) {
              const int ix = kStride * c + kx - pad;
              if (ix < 0 || ix >= x.w) continue;
              acc += L.weight[static_cast<std::size_t>(((o * L.in + i) * L.kernel + ky) * L.kernel + kx)] * x.at(i, iy, ix);
            }
          }
        }
        y.at(o, r, c) = acc;
      }
    }
  }
  return y;
}

/// Accumulates parameter gradients into `g` and returns dL/dx.
Tensor3 conv_backward(const ConvLayer& L, const Tensor3& x, const Tensor3& dy, ConvLayer& g) {
  const int pad = L.kernel / 2;
  Tensor3 dx(x.c, x.h, x.w);
  for (int o = 0; o < L.out; ++o) {
    for (int r = 0; r < dy.h; ++r) {
      for (int c = 0; c < dy.w; ++c) {
        const double d = dy.at(o, r, c);
        if (d == 0.0) continue;
        g.bias[static_cast<std::size_t>(o)] += d;
        for (int i = 0; i < L.in; ++i) {
          for (int ky = 0; ky < L.kernel; ++ky) {
            const int iy = kStride * r + ky - pad;
            if (iy < 0 || iy >= x.h) continue;
            for (int kx = 0; kx < L.kernel; ++kx) {
              const int ix = kStride * c + kx - pad;
              if (ix < 0 || ix >= x.w) continue;
              const auto widx = static_cast<std::size_t>(((o * L.in + i) * L.kernel + ky) * L.kernel + kx);
              g.weight[widx] += d * x.at(i, iy, ix);
              dx.at(i, iy, ix) += d * L.weight[widx];
            }
          }
        }
      }
    }
  }
  return dx;
}

std::vector<double> dense_forward(const DenseLayer& L, const std::vector<double>& x) {
  std::vector<double> y(L.bias);
  for (int o = 0; o < L.out; ++o) {
    for (int i = 0; i < L.in; ++i) {
      y[static_cast<std::size_t>(o)] += L.weight[static_cast<std::size_t>(o * L.in + i)] * x[static_cast<std::size_t>(i)];
    }
  }
  return y;
}

std::vector<double> dense_backward(const DenseLayer& L, const std::vector<double>& x, const std::vector<double>& dy,
                                   DenseLayer& g) {
  std::vector<double> dx(static_cast<std::size_t>(L.in), 0.0);
  for (int o = 0; o < L.out; ++o) {
    const double d = dy[static_cast<std::size_t>(o)];
    g.bias[static_cast<std::size_t>(o)] += d;
    for (int i = 0; i < L.in; ++i) {
      const auto w = static_cast<std::size_t>(o * L.in + i);
      g.weight[w] += d * x[static_cast<std::size_t>(i)];
      dx[static_cast<std::size_t>(i)] += d * L.weight[w];
    }
  }
  return dx;
}

struct ForwardTrace {
  std::vector<Tensor3> inputs;       // input of every conv stage
  std::vector<Tensor3> activations;  // tanh output of every conv stage
  std::vector<double> pooled;
  std::vector<double> hidden_act;
  std::array<double, 3> output{};
};

Tensor3 stack_inputs(const FsaParams& p, const BevGrid& ego, const BevGrid& nbr) {
  if (!(ego.spec == nbr.spec)) throw ShapeMismatch("fsa network: ego and neighbor grids differ in spec");
  if (ego.channels + nbr.channels != p.arch.in_channels) {
    throw ShapeMismatch("fsa network: expected " + std::to_string(p.arch.in_channels) + " stacked channels, got " +
                        std::to_string(ego.channels + nbr.channels));
  }
  Tensor3 x(p.arch.in_channels, ego.spec.height, ego.spec.width);
  std::copy(ego.values.begin(), ego.values.end(), x.v.begin());
  std::copy(nbr.values.begin(), nbr.values.end(), x.v.begin() + static_cast<std::ptrdiff_t>(ego.values.size()));
  return x;
}

ForwardTrace forward(const FsaParams& p, const BevGrid& ego, const BevGrid& nbr) {
  ForwardTrace t;
  Tensor3 x = stack_inputs(p, ego, nbr);
  for (const auto& layer : p.conv) {
    Tensor3 y = conv_forward(layer, x);
    for (double& v : y.v) v = std::tanh(v);
    t.inputs.push_back(std::move(x));
    x = y;
    t.activations.push_back(std::move(y));
  }
  const Tensor3& last = t.activations.back();
  const double area = static_cast<double>(last.h * last.w);
  t.pooled.assign(static_cast<std::size_t>(last.c), 0.0);
  for (int ch = 0; ch < last.c; ++ch) {
    double s = 0.0;
    for (int r = 0; r < last.h; ++r) {
      for (int c = 0; c < last.w; ++c) s += last.at(ch, r, c);
    }
    t.pooled[static_cast<std::size_t>(ch)] = s / area;
  }
  t.hidden_act = dense_forward(p.hidden, t.pooled);
  for (double& v : t.hidden_act) v = std::tanh(v);
  const auto out = dense_forward(p.head, t.hidden_act);
  t.output = {out[0], out[1], out[2]};
  return t;
}

}  // namespace

FsaParams FsaParams::zeros(const FsaArchitecture& arch) {
  arch.validate();
  FsaParams p;
  p.arch = arch;
  int in = arch.in_channels;
  for (int out : arch.conv_channels) {
    p.conv.push_back(make_conv(in, out, arch.kernel));
    in = out;
  }
  p.hidden = make_dense(in, arch.hidden);
  p.head = make_dense(arch.hidden, kOutputs);
  return p;
}

FsaParams FsaParams::random(const FsaArchitecture& arch, Rng& rng) {
  FsaParams p = zeros(arch);
  for (auto& c : p.conv) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(c.in * c.kernel * c.kernel));
    for (double& w : c.weight) w = rng.normal(0.0, sd);
  }
  for (DenseLayer* d : {&p.hidden, &p.head}) {
    const double sd = 1.0 / std::sqrt(static_cast<double>(d->in));
    for (double& w : d->weight) w = rng.normal(0.0, sd);
  }
  return p;
}

std::vector<std::span<double>> FsaParams::tensors() {
  std::vector<std::span<double>> t;
  for (auto& c : conv) {
    t.emplace_back(c.weight);
    t.emplace_back(c.bias);
  }
  t.emplace_back(hidden.weight);
  t.emplace_back(hidden.bias);
  t.emplace_back(head.weight);
  t.emplace_back(head.bias);
  return t;
}

std::vector<std::span<const double>> FsaParams::tensors() const {
  std::vector<std::span<const double>> t;
  for (const auto& c : conv) {
    t.emplace_back(c.weight);
    t.emplace_back(c.bias);
  }
  t.emplace_back(hidden.weight);
  t.emplace_back(hidden.bias);
  t.emplace_back(head.weight);
  t.emplace_back(head.bias);
  return t;
}

std::array<double, 3> fsa_forward_raw(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr) {
  return forward(params, ego, nbr).output;
}

OffsetDelta fsa_forward(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr) {
  const auto y = fsa_forward_raw(params, ego, nbr);
  return {y[0], y[1], normalize_angle(y[2])};
}

FsaGradients fsa_backward(const FsaParams& params, const BevGrid& ego, const BevGrid& nbr, const OffsetDelta& target) {
  const ForwardTrace t = forward(params, ego, nbr);
  FsaGradients out;
  out.grads = FsaParams::zeros(params.arch);

  const std::array<double, 3> goal{target.dx, target.dy, target.dtheta};
  std::vector<double> d_out(3);
  for (std::size_t k = 0; k < 3; ++k) {
    d_out[k] = t.output[k] - goal[k];
    out.loss += 0.5 * d_out[k] * d_out[k];
  }

  std::vector<double> d_hidden = dense_backward(params.head, t.hidden_act, d_out, out.grads.head);
  for (std::size_t k = 0; k < d_hidden.size(); ++k) d_hidden[k] *= 1.0 - t.hidden_act[k] * t.hidden_act[k];
  const std::vector<double> d_pooled = dense_backward(params.hidden, t.pooled, d_hidden, out.grads.hidden);

  const Tensor3& last = t.activations.back();
  Tensor3 d_act(last.c, last.h, last.w);
  const double inv_area = 1.0 / static_cast<double>(last.h * last.w);
  for (int ch = 0; ch < last.c; ++ch) {
    for (int r = 0; r < last.h; ++r) {
      for (int c = 0; c < last.w; ++c) d_act.at(ch, r, c) = d_pooled[static_cast<std::size_t>(ch)] * inv_area;
    }
  }
  for (std::size_t s = params.conv.size(); s-- > 0;) {
    const Tensor3& a = t.activations[s];
    for (std::size_t k = 0; k < d_act.v.size(); ++k) d_act.v[k] *= 1.0 - a.v[k] * a.v[k];
    d_act = conv_backward(params.conv[s], t.inputs[s], d_act, out.grads.conv[s]);
  }
  return out;
}

}  // namespace coopalign::fusion
