#pragma once

#include <string>
#include <vector>

#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

/// 3x3 convolution, stride 1, zero "same" padding. Feature maps are rank-3
/// tensors laid out (channel, row, col).
struct Conv3x3 {
  LayerKind kind = LayerKind::conv;
  Param weight;  // out x in x 3 x 3
  Param bias;    // out

  Conv3x3() = default;
  Conv3x3(std::size_t in_channels, std::size_t out_channels, const std::string& name)
      : weight(name + ".weight", {out_channels, in_channels, 3, 3}), bias(name + ".bias", {out_channels}) {}

  std::size_t in_channels() const { return weight.value.extent(1); }
  std::size_t out_channels() const { return weight.value.extent(0); }

  void init(Rng& rng) {
    init_glorot(weight, in_channels() * 9, out_channels() * 9, rng);
    init_constant(bias, 0.0);
  }

  ParamRefs params() { return {&weight, &bias}; }

  std::size_t widx(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) const {
    return ((o * in_channels() + i) * 3 + ky) * 3 + kx;
  }
};

inline Tensor conv3x3_forward(const Tensor& x, const Conv3x3& conv) {
  require_dim(x.extent(0), conv.in_channels(), "conv input channels");
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t cout = conv.out_channels();
  Tensor y({cout, h, w});
  const double* wt = conv.weight.value.data();
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) y(o, r, c) = conv.bias.value[o];
    }
    for (std::size_t i = 0; i < cin; ++i) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const double k = wt[conv.widx(o, i, ky, kx)];
          // output (r, c) reads input (r + ky - 1, c + kx - 1)
          const std::size_t r0 = ky == 0 ? 1 : 0, r1 = ky == 2 ? h - 1 : h;
          const std::size_t c0 = kx == 0 ? 1 : 0, c1 = kx == 2 ? w - 1 : w;
          for (std::size_t r = r0; r < r1; ++r) {
            const double* src = &x(i, r + ky - 1, 0);
            double* dst = &y(o, r, 0);
            for (std::size_t c = c0; c < c1; ++c) dst[c] += k * src[c + kx - 1];
          }
        }
      }
    }
  }
  return y;
}

/// Accumulates weight/bias gradients and returns dL/dx.
inline Tensor conv3x3_backward(const Tensor& x, const Tensor& dy, Conv3x3& conv) {
  const std::size_t cin = x.extent(0), h = x.extent(1), w = x.extent(2);
  const std::size_t cout = conv.out_channels();
  Tensor dx(x.shape());
  const double* wt = conv.weight.value.data();
  double* gw = conv.weight.grad.data();
  for (std::size_t o = 0; o < cout; ++o) {
    double db = 0.0;
    for (std::size_t r = 0; r < h; ++r) {
      for (std::size_t c = 0; c < w; ++c) db += dy(o, r, c);
    }
    conv.bias.grad[o] += db;
    for (std::size_t i = 0; i < cin; ++i) {
      for (std::size_t ky = 0; ky < 3; ++ky) {
        for (std::size_t kx = 0; kx < 3; ++kx) {
          const std::size_t wi = conv.widx(o, i, ky, kx);
          const double k = wt[wi];
          const std::size_t r0 = ky == 0 ? 1 : 0, r1 = ky == 2 ? h - 1 : h;
          const std::size_t c0 = kx == 0 ? 1 : 0, c1 = kx == 2 ? w - 1 : w;
          double acc = 0.0;
          for (std::size_t r = r0; r < r1; ++r) {
            const double* src = &x(i, r + ky - 1, 0);
            double* dsrc = &dx(i, r + ky - 1, 0);
            const double* g = &dy(o, r, 0);
            for (std::size_t c = c0; c < c1; ++c) {
              acc += g[c] * src[c + kx - 1];
              dsrc[c + kx - 1] += k * g[c];
            }
          }
          gw[wi] += acc;
        }
      }
    }
  }
  return dx;
}

inline Tensor relu_forward(const Tensor& z) {
  Tensor y = z;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

inline Tensor relu_backward(const Tensor& z, const Tensor& dy) {
  Tensor dz = dy;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0.0)) dz[i] = 0.0;
  }
  return dz;
}

/// 2x2 max pooling, stride 2 (odd trailing rows/cols are dropped).
struct MaxPoolResult {
  Tensor output;
  std::vector<std::size_t> argmax;  // flat input index per output cell
};

inline MaxPoolResult maxpool2_forward(const Tensor& x) {
  const std::size_t ch = x.extent(0), h = x.extent(1) / 2, w = x.extent(2) / 2;
  if (h == 0 || w == 0) fail(ErrorCode::ShapeError, "feature map too small to pool");
  MaxPoolResult r{Tensor({ch, h, w}), std::vector<std::size_t>(ch * h * w)};
  const std::size_t in_w = x.extent(2), in_h = x.extent(1);
  for (std::size_t k = 0; k < ch; ++k) {
    for (std::size_t i = 0; i < h; ++i) {
      for (std::size_t j = 0; j < w; ++j) {
        std::size_t best = (k * in_h + 2 * i) * in_w + 2 * j;
        for (std::size_t di = 0; di < 2; ++di) {
          for (std::size_t dj = 0; dj < 2; ++dj) {
            const std::size_t idx = (k * in_h + 2 * i + di) * in_w + 2 * j + dj;
            if (x[idx] > x[best]) best = idx;
          }
        }
        const std::size_t o = (k * h + i) * w + j;
        r.output[o] = x[best];
        r.argmax[o] = best;
      }
    }
  }
  return r;
}

inline Tensor maxpool2_backward(const std::vector<std::size_t>& in_shape, const MaxPoolResult& r,
                                const Tensor& dy) {
  Tensor dx(in_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[r.argmax[o]] += dy[o];
  return dx;
}

inline Vec global_average_pool(const Tensor& x) {
  const std::size_t ch = x.extent(0), area = x.extent(1) * x.extent(2);
  Vec out(ch, 0.0);
  for (std::size_t k = 0; k < ch; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i < area; ++i) s += x[k * area + i];
    out[k] = s / static_cast<double>(area);
  }
  return out;
}

inline Tensor global_average_pool_backward(const std::vector<std::size_t>& in_shape,
                                           std::span<const double> dy) {
  Tensor dx(in_shape);
  const std::size_t area = in_shape[1] * in_shape[2];
  for (std::size_t k = 0; k < in_shape[0]; ++k) {
    const double g = dy[k] / static_cast<double>(area);
    for (std::size_t i = 0; i < area; ++i) dx[k * area + i] = g;
  }
  return dx;
}

}  // namespace vidpop::nn
