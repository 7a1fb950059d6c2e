#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "vidpop/error.hpp"

namespace vidpop::service {

inline constexpr std::size_t kDefaultResamples = 10000;

struct AbResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double lift_percent = 0.0;
  double ci_low = 0.0;   // 95% percentile-bootstrap interval of the lift
  double ci_high = 0.0;
  std::size_t n_a = 0;
  std::size_t n_b = 0;
  std::size_t resamples = 0;
};

namespace detail {

/// Compensated (Neumaier) mean, so that n copies of x average to x.
inline double mean(std::span<const double> v) {
  double sum = 0.0, c = 0.0;
  for (double x : v) {
    const double t = sum + x;
    c += std::fabs(sum) >= std::fabs(x) ? (sum - t) + x : (x - t) + sum;
    sum = t;
  }
  return (sum + c) / static_cast<double>(v.size());
}

inline void check_group(std::span<const double> g, const char* name) {
  if (g.empty()) fail(ErrorCode::EmptyGroup, std::string(name) + " is empty");
  for (double x : g) {
    if (!std::isfinite(x) || x < 0.0) {
      fail(ErrorCode::ConfigError, std::string(name) + " must hold finite, non-negative view counts");
    }
  }
}

}  // namespace detail

inline double lift_percent(double mean_a, double mean_b) { return 100.0 * (mean_b - mean_a) / mean_a; }

/// Percentage lift of mean(B) over mean(A) with a seeded percentile-bootstrap
/// 95% interval. Resamples whose baseline mean is zero are skipped.
inline AbResult ab_lift(std::span<const double> group_a, std::span<const double> group_b, std::uint64_t seed,
                        std::size_t resamples = kDefaultResamples) {
  detail::check_group(group_a, "group_a");
  detail::check_group(group_b, "group_b");
  if (resamples == 0) fail(ErrorCode::ConfigError, "resamples must be positive");
  AbResult r;
  r.n_a = group_a.size();
  r.n_b = group_b.size();
  r.mean_a = detail::mean(group_a);
  r.mean_b = detail::mean(group_b);
  if (!(r.mean_a > 0.0)) fail(ErrorCode::DegenerateBaseline, "group_a mean is zero; lift is undefined");
  r.lift_percent = lift_percent(r.mean_a, r.mean_b);

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick_a(0, r.n_a - 1), pick_b(0, r.n_b - 1);
  std::vector<double> lifts, sa(r.n_a), sb(r.n_b);
  lifts.reserve(resamples);
  for (std::size_t k = 0; k < resamples; ++k) {
    for (double& x : sa) x = group_a[pick_a(rng)];
    for (double& x : sb) x = group_b[pick_b(rng)];
    const double ma = detail::mean(sa);
    if (ma > 0.0) lifts.push_back(lift_percent(ma, detail::mean(sb)));
  }
  r.resamples = lifts.size();
  if (lifts.empty()) {
    r.ci_low = r.ci_high = r.lift_percent;
    return r;
  }
  std::sort(lifts.begin(), lifts.end());
  const auto at = [&](double q) {
    const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(lifts.size()) - 1e-9));
    return lifts[std::clamp<std::size_t>(rank, 1, lifts.size()) - 1];
  };
  r.ci_low = at(0.025);
  r.ci_high = at(0.975);
  return r;
}

}  // namespace vidpop::service
