#pragma once

#include <span>
#include <string>

#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

/// Fully connected layer y = W x + b, W is (out x in).
struct Dense {
  LayerKind kind = LayerKind::dense;
  Param weight;
  Param bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out, const std::string& name, LayerKind k = LayerKind::dense)
      : kind(k), weight(name + ".weight", {out, in}), bias(name + ".bias", {out}) {}

  std::size_t in_dim() const { return weight.value.extent(1); }
  std::size_t out_dim() const { return weight.value.extent(0); }

  void init(Rng& rng) {
    init_glorot(weight, in_dim(), out_dim(), rng);
    init_constant(bias, 0.0);
  }

  Vec forward(std::span<const double> x) const {
    require_dim(x.size(), in_dim(), "dense input");
    Vec y = matvec(weight.value, x);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += bias.value[i];
    return y;
  }

  /// Accumulates dW, db and returns dx.
  Vec backward(std::span<const double> x, std::span<const double> dy) {
    outer_add(weight.grad, dy, x);
    for (std::size_t i = 0; i < dy.size(); ++i) bias.grad[i] += dy[i];
    Vec dx(in_dim(), 0.0);
    matvec_transpose_add(weight.value, dy, dx);
    return dx;
  }

  ParamRefs params() { return {&weight, &bias}; }
};

}  // namespace vidpop::nn
