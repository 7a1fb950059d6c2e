#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "vidpop/nnkern/activations.hpp"
#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

/// Additive attention: e_t = v . tanh(W h_t), alpha = softmax(e),
/// context = sum_t alpha_t h_t.
struct AdditiveAttention {
  LayerKind kind = LayerKind::attention;
  Param w;  // attention_dim x input_dim
  Param v;  // attention_dim

  AdditiveAttention() = default;
  AdditiveAttention(std::size_t input_dim, std::size_t attention_dim, const std::string& name)
      : w(name + ".w", {attention_dim, input_dim}), v(name + ".v", {attention_dim}) {}

  std::size_t input_dim() const { return w.value.extent(1); }
  std::size_t attention_dim() const { return w.value.extent(0); }

  void init(Rng& rng) {
    init_glorot(w, input_dim(), attention_dim(), rng);
    init_glorot(v, attention_dim(), 1, rng);
  }

  ParamRefs params() { return {&w, &v}; }
};

struct AttentionResult {
  Vec context;
  Vec weights;
  Vec scores;
  std::vector<Vec> projected;  // tanh(W h_t), kept for backward
};

inline AttentionResult attention_pool(const std::vector<Vec>& hs, const AdditiveAttention& p) {
  if (hs.empty()) fail(ErrorCode::EmptyInput, "attention over an empty sequence");
  const std::size_t d = p.input_dim();
  AttentionResult r;
  r.scores.resize(hs.size());
  r.projected.resize(hs.size());
  for (std::size_t t = 0; t < hs.size(); ++t) {
    require_dim(hs[t].size(), d, "attention input");
    Vec u = matvec(p.w.value, hs[t]);
    for (double& x : u) x = std::tanh(x);
    r.scores[t] = dot(p.v.value.values(), u);
    r.projected[t] = std::move(u);
  }
  r.weights = softmax(r.scores);
  r.context.assign(d, 0.0);
  for (std::size_t t = 0; t < hs.size(); ++t) {
    for (std::size_t j = 0; j < d; ++j) r.context[j] += r.weights[t] * hs[t][j];
  }
  return r;
}

/// Given dL/dcontext, accumulates dW, dv and returns dL/dh_t.
inline std::vector<Vec> attention_backward(const std::vector<Vec>& hs, const AttentionResult& r,
                                           std::span<const double> dcontext, AdditiveAttention& p) {
  const std::size_t n = hs.size();
  const std::size_t d = p.input_dim();
  const std::size_t a = p.attention_dim();
  std::vector<Vec> dh(n, Vec(d, 0.0));
  Vec dweights(n);
  for (std::size_t t = 0; t < n; ++t) {
    dweights[t] = dot(dcontext, hs[t]);
    for (std::size_t j = 0; j < d; ++j) dh[t][j] = r.weights[t] * dcontext[j];
  }
  const Vec dscores = softmax_backward(r.weights, dweights);
  Vec dz(a);
  for (std::size_t t = 0; t < n; ++t) {
    const Vec& u = r.projected[t];
    for (std::size_t k = 0; k < a; ++k) {
      p.v.grad[k] += dscores[t] * u[k];
      dz[k] = dscores[t] * p.v.value[k] * (1.0 - u[k] * u[k]);
    }
    outer_add(p.w.grad, dz, hs[t]);
    matvec_transpose_add(p.w.value, dz, dh[t]);
  }
  return dh;
}

}  // namespace vidpop::nn
