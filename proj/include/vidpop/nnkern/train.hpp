#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vidpop/nnkern/gradcheck.hpp"
#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

template <class X>
struct Example {
  X input;
  int label = 0;
};

/// A trainable classifier over inputs of type X.
///
/// `loss` is a pure forward pass (optionally recording kinks), `accumulate`
/// runs forward and backward for one example and adds into the param grads.
template <class M, class X>
concept Classifier = requires(M m, const M cm, const X& x, int label, Rng& rng, KinkProbe* probe) {
  { m.params() } -> std::same_as<ParamRefs>;
  { m.init(rng) };
  { cm.loss(x, label, probe) } -> std::convertible_to<double>;
  { m.accumulate(x, label) } -> std::convertible_to<double>;
  { cm.predict(x) } -> std::convertible_to<int>;
};

struct TrainConfig {
  double learning_rate = 0.1;
  int epochs = 20;
  int batch_size = 16;
  std::uint64_t seed = 0;
  double l2 = 0.0;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
      fail(ErrorCode::ConfigError, "learning rate must be positive");
    }
    if (epochs <= 0) fail(ErrorCode::ConfigError, "epochs must be positive");
    if (batch_size <= 0) fail(ErrorCode::ConfigError, "batch size must be positive");
    if (!(l2 >= 0.0)) fail(ErrorCode::ConfigError, "l2 penalty must be nonnegative");
  }
};

struct EpochMetrics {
  int epoch = 0;
  double loss = 0.0;
  double accuracy = 0.0;
  std::optional<double> val_accuracy;
  std::optional<double> val_loss;

  friend bool operator==(const EpochMetrics&, const EpochMetrics&) = default;
};

struct TrainHistory {
  std::vector<EpochMetrics> epochs;
  int best_epoch = -1;  // epoch whose parameters were kept
};

template <class M, class X>
  requires Classifier<M, X>
double accuracy(const M& model, std::span<const Example<X>> data) {
  if (data.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& e : data) hits += model.predict(e.input) == e.label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

template <class M, class X>
  requires Classifier<M, X>
double mean_loss(const M& model, std::span<const Example<X>> data) {
  if (data.empty()) return 0.0;
  double s = 0.0;
  for (const auto& e : data) s += model.loss(e.input, e.label, nullptr);
  return s / static_cast<double>(data.size());
}

/// Plain mini-batch SGD with optional L2. Initialization, shuffling and
/// therefore the final parameters are a deterministic function of cfg.seed.
/// With a validation set, the parameters of the best validation epoch are
/// restored at the end. Accuracy ties go to the lower validation loss, since
/// accuracy saturates long before the model stops improving.
template <class M, class X>
  requires Classifier<M, X>
TrainHistory train_classifier(M& model, std::span<const Example<X>> train, std::span<const Example<X>> val,
                              const TrainConfig& cfg) {
  cfg.validate();
  if (train.empty()) fail(ErrorCode::EmptyDataset, "no training examples");
  Rng rng(cfg.seed);
  model.init(rng);
  const ParamRefs params = model.params();

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  TrainHistory history;
  double best_val = -1.0;
  double best_val_loss = 0.0;
  std::vector<Tensor> best_params;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
      zero_grads(params);
      for (std::size_t k = start; k < end; ++k) {
        const auto& ex = train[order[k]];
        const double l = model.accumulate(ex.input, ex.label);
        if (!std::isfinite(l)) {
          fail(ErrorCode::NumericalError, "non-finite loss at epoch " + std::to_string(epoch));
        }
        loss_sum += l;
      }
      const double scale = 1.0 / static_cast<double>(end - start);
      for (Param* p : params) {
        for (std::size_t i = 0; i < p->size(); ++i) {
          const double g = p->grad[i] * scale + cfg.l2 * p->value[i];
          p->value[i] -= cfg.learning_rate * g;
        }
      }
    }
    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss_sum / static_cast<double>(train.size());
    if (!std::isfinite(m.loss)) {
      fail(ErrorCode::NumericalError, "non-finite loss at epoch " + std::to_string(epoch));
    }
    m.accuracy = accuracy<M, X>(model, train);
    if (!val.empty()) {
      m.val_accuracy = accuracy<M, X>(model, val);
      m.val_loss = mean_loss<M, X>(model, val);
      if (*m.val_accuracy > best_val || (*m.val_accuracy == best_val && *m.val_loss < best_val_loss)) {
        best_val = *m.val_accuracy;
        best_val_loss = *m.val_loss;
        best_params = snapshot(params);
        history.best_epoch = epoch;
      }
    } else {
      history.best_epoch = epoch;
    }
    history.epochs.push_back(m);
  }
  if (!best_params.empty()) restore(params, best_params);
  return history;
}

template <class M, class X>
  requires Classifier<M, X>
TrainHistory train_classifier(M& model, const std::vector<Example<X>>& train,
                              const std::vector<Example<X>>& val, const TrainConfig& cfg) {
  return train_classifier<M, X>(model, std::span<const Example<X>>(train), std::span<const Example<X>>(val),
                                cfg);
}

/// Adapts a Classifier to the batch interface used by `gradient_check`:
/// mean loss over the batch and its exact gradient.
template <class M, class X>
  requires Classifier<M, X>
struct ClassifierObjective {
  M& model;
  KinkProbe last_probe{};

  ParamRefs params() { return model.params(); }

  double batch_loss(const std::vector<Example<X>>& batch) {
    last_probe = {};
    double s = 0.0;
    for (const auto& e : batch) s += model.loss(e.input, e.label, &last_probe);
    return s / static_cast<double>(batch.size());
  }

  void batch_gradient(const std::vector<Example<X>>& batch) {
    for (const auto& e : batch) model.accumulate(e.input, e.label);
    const double scale = 1.0 / static_cast<double>(batch.size());
    for (Param* p : model.params()) {
      for (double& g : p->grad.values()) g *= scale;
    }
  }

  KinkProbe kink_probe() const { return last_probe; }
};

template <class X, class M>
  requires Classifier<M, X>
GradCheckReport check_classifier_gradients(M& model, const std::vector<Example<X>>& batch,
                                           const GradCheckOptions& opt = {}) {
  ClassifierObjective<M, X> objective{model};
  return gradient_check(objective, batch, opt);
}

}  // namespace vidpop::nn
