#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vidpop/nnkern/activations.hpp"
#include "vidpop/nnkern/dense.hpp"
#include "vidpop/nnkern/gradcheck.hpp"

namespace vidpop::nn {

/// Dense + sigmoid binary classifier trained with cross-entropy.
class LogisticHead {
 public:
  LogisticHead() = default;
  LogisticHead(std::size_t input_dim, const std::string& name = "head") : dense_(input_dim, 1, name) {}

  std::size_t input_dim() const { return dense_.in_dim(); }
  Dense& layer() { return dense_; }
  const Dense& layer() const { return dense_; }

  void init(Rng& rng) { dense_.init(rng); }
  ParamRefs params() { return dense_.params(); }

  double logit(const Vec& x) const { return dense_.forward(x)[0]; }
  double probability(const Vec& x) const { return sigmoid(logit(x)); }

  double loss(const Vec& x, int label, KinkProbe* = nullptr) const { return bce_with_logit(logit(x), label); }

  double accumulate(const Vec& x, int label) {
    const double z = logit(x);
    const double dz = sigmoid(z) - label;
    dense_.backward(x, std::span<const double>(&dz, 1));
    return bce_with_logit(z, label);
  }

  int predict(const Vec& x) const { return logit(x) > 0.0 ? 1 : 0; }

 private:
  Dense dense_;
};

/// dense -> ReLU -> dense -> softmax, trained with categorical cross-entropy.
class SoftmaxMlp {
 public:
  SoftmaxMlp() = default;
  SoftmaxMlp(std::size_t input_dim, std::size_t hidden_dim, std::size_t classes,
             const std::string& name = "mlp")
      : hidden_(input_dim, hidden_dim, name + ".hidden"), output_(hidden_dim, classes, name + ".output") {}

  std::size_t input_dim() const { return hidden_.in_dim(); }
  std::size_t hidden_dim() const { return hidden_.out_dim(); }
  std::size_t classes() const { return output_.out_dim(); }

  void init(Rng& rng) {
    hidden_.init(rng);
    output_.init(rng);
  }

  ParamRefs params() {
    ParamRefs out = hidden_.params();
    append(out, output_.params());
    return out;
  }

  Vec probabilities(const Vec& x, KinkProbe* probe = nullptr) const {
    const Vec z = hidden_.forward(x);
    if (probe) record(z, *probe);
    Vec a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = relu(z[i]);
    return softmax(output_.forward(a));
  }

  double loss(const Vec& x, int label, KinkProbe* probe = nullptr) const {
    const Vec p = probabilities(x, probe);
    return -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
  }

  double accumulate(const Vec& x, int label) {
    const Vec z = hidden_.forward(x);
    Vec a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = relu(z[i]);
    Vec p = softmax(output_.forward(a));
    const double l = -std::log(std::max(p[static_cast<std::size_t>(label)], 1e-300));
    Vec dlogits = p;
    dlogits[static_cast<std::size_t>(label)] -= 1.0;
    Vec da = output_.backward(a, dlogits);
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (!(z[i] > 0.0)) da[i] = 0.0;
    }
    hidden_.backward(x, da);
    return l;
  }

  int predict(const Vec& x) const {
    const Vec p = probabilities(x);
    return static_cast<int>(std::max_element(p.begin(), p.end()) - p.begin());
  }

 private:
  static void record(const Vec& z, KinkProbe& probe) {
    for (double v : z) {
      probe.pattern.push_back(v > 0.0 ? 1 : 0);
      probe.min_margin = std::min(probe.min_margin, std::abs(v));
    }
  }

  Dense hidden_;
  Dense output_;
};

}  // namespace vidpop::nn
