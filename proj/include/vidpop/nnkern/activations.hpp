#pragma once

#include <algorithm>
#include <cmath>
#include <span>

#include "vidpop/nnkern/tensor.hpp"

namespace vidpop::nn {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline double relu(double x) { return x > 0.0 ? x : 0.0; }

/// Numerically stable softmax (shift by max).
inline Vec softmax(std::span<const double> x) {
  if (x.empty()) fail(ErrorCode::EmptyInput, "softmax of an empty vector");
  const double m = *std::max_element(x.begin(), x.end());
  Vec out(x.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = std::exp(x[i] - m);
    sum += out[i];
  }
  for (double& v : out) v /= sum;
  return out;
}

/// Gradient w.r.t. the logits given the softmax output `p` and upstream
/// gradient `dp`: dx_i = p_i (dp_i - sum_j p_j dp_j).
inline Vec softmax_backward(std::span<const double> p, std::span<const double> dp) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += p[i] * dp[i];
  Vec dx(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) dx[i] = p[i] * (dp[i] - s);
  return dx;
}

/// Binary cross-entropy on a logit, computed without forming the sigmoid.
inline double bce_with_logit(double logit, int label) {
  // log(1 + e^-|z|) + max(z, 0) - z*y
  return std::log1p(std::exp(-std::abs(logit))) + std::max(logit, 0.0) - logit * label;
}

}  // namespace vidpop::nn
