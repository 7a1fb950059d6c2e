#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "vidpop/nnkern/tensor.hpp"

namespace vidpop::nn {

using Rng = std::mt19937_64;

enum class LayerKind { dense, lstm, attention, conv, embedding_projection };

constexpr std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::lstm: return "lstm";
    case LayerKind::attention: return "attention";
    case LayerKind::conv: return "conv";
    case LayerKind::embedding_projection: return "embedding-projection";
  }
  return "unknown";
}

/// A trainable tensor and its gradient accumulator.
struct Param {
  std::string name;
  Tensor value;
  Tensor grad;

  Param() = default;
  Param(std::string n, std::vector<std::size_t> shape)
      : name(std::move(n)), value(shape), grad(std::move(shape)) {}

  std::size_t size() const noexcept { return value.size(); }
  void zero_grad() { grad.fill(0.0); }
};

using ParamRefs = std::vector<Param*>;

inline void zero_grads(const ParamRefs& params) {
  for (Param* p : params) p->zero_grad();
}

inline void append(ParamRefs& into, const ParamRefs& more) {
  into.insert(into.end(), more.begin(), more.end());
}

/// Glorot-uniform initialization: U(-r, r), r = sqrt(6 / (fan_in + fan_out)).
inline void init_glorot(Param& p, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double r = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-r, r);
  for (double& v : p.value.values()) v = dist(rng);
}

inline void init_constant(Param& p, double v) { p.value.fill(v); }

/// Deep copy of every parameter value, used for best-epoch snapshots.
inline std::vector<Tensor> snapshot(const ParamRefs& params) {
  std::vector<Tensor> out;
  out.reserve(params.size());
  for (const Param* p : params) out.push_back(p->value);
  return out;
}

inline void restore(const ParamRefs& params, const std::vector<Tensor>& values) {
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = values[i];
}

}  // namespace vidpop::nn
