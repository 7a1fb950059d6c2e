#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "vidpop/nnkern/param.hpp"

namespace vidpop::nn {

/// Snapshot of the piecewise-linear decisions taken in a forward pass
/// (ReLU signs, max-pool winners) and the smallest |pre-activation| seen at
/// a ReLU. Central differences are meaningless across a kink, so a parameter
/// whose perturbation changes the pattern, or lands within the threshold of
/// a kink, is skipped.
struct KinkProbe {
  std::vector<std::size_t> pattern;
  double min_margin = std::numeric_limits<double>::infinity();
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

struct GradCheckOptions {
  double epsilon = 1e-4;
  double kink_threshold = 1e-6;
};

inline double relative_error(double analytic, double numeric) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
  return std::abs(analytic - numeric) / denom;
}

/// Compares analytic gradients against central differences.
///
/// `loss` evaluates the objective from the current parameter values.
/// `gradient` must zero and then fill every param's `grad`.
/// `probe`, when set, reports the kink pattern of the most recent `loss` call.
inline GradCheckReport gradient_check(const ParamRefs& params, const std::function<double()>& loss,
                                      const std::function<void()>& gradient,
                                      const GradCheckOptions& opt = {},
                                      const std::function<KinkProbe()>& probe = {}) {
  if (!(opt.epsilon >= 1e-6 && opt.epsilon <= 1e-3)) {
    fail(ErrorCode::ConfigError, "gradient check epsilon must lie in [1e-6, 1e-3]");
  }
  const double base = loss();
  if (!std::isfinite(base)) fail(ErrorCode::NumericalError, "non-finite loss in gradient check");
  KinkProbe base_probe;
  if (probe) base_probe = probe();
  gradient();
  std::vector<Tensor> analytic;
  analytic.reserve(params.size());
  for (const Param* p : params) analytic.push_back(p->grad);

  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Param& p = *params[pi];
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double orig = p.value[i];
      p.value[i] = orig + opt.epsilon;
      const double up = loss();
      KinkProbe up_probe;
      if (probe) up_probe = probe();
      p.value[i] = orig - opt.epsilon;
      const double down = loss();
      KinkProbe down_probe;
      if (probe) down_probe = probe();
      p.value[i] = orig;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        fail(ErrorCode::NumericalError, "non-finite loss while perturbing " + p.name);
      }
      if (probe && (up_probe.pattern != base_probe.pattern || down_probe.pattern != base_probe.pattern ||
                    up_probe.min_margin < opt.kink_threshold ||
                    down_probe.min_margin < opt.kink_threshold)) {
        ++report.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * opt.epsilon);
      const double err = relative_error(analytic[pi][i], numeric);
      ++report.checked;
      if (err >= report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_param = p.name;
        report.worst_index = i;
        report.worst_analytic = analytic[pi][i];
        report.worst_numeric = numeric;
      }
    }
  }
  // Leave the analytic gradients in place for the caller.
  for (std::size_t pi = 0; pi < params.size(); ++pi) params[pi]->grad = analytic[pi];
  return report;
}

/// Models that expose `params()`, `batch_loss(batch)` and
/// `batch_gradient(batch)` (zeroing grads first) can be checked directly.
template <class Model, class Batch>
GradCheckReport gradient_check(Model& model, const Batch& batch, const GradCheckOptions& opt = {}) {
  const ParamRefs params = model.params();
  std::function<KinkProbe()> probe;
  if constexpr (requires { model.kink_probe(); }) {
    probe = [&model] { return model.kink_probe(); };
  }
  return gradient_check(
      params, [&] { return model.batch_loss(batch); },
      [&] {
        zero_grads(params);
        model.batch_gradient(batch);
      },
      opt, probe);
}

}  // namespace vidpop::nn
