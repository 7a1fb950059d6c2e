#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "vidpop/datapipe/normalize.hpp"
#include "vidpop/error.hpp"

namespace vidpop::service {

inline constexpr unsigned kAlertPercentile = 20;

/// 1-based nearest rank ceil(p/100 * n), in integer arithmetic so that exact
/// multiples never round up.
constexpr std::size_t nearest_rank(std::size_t n, unsigned percent) {
  return (static_cast<std::size_t>(percent) * n + 99) / 100;
}

/// Value at the nearest rank of the ascending sample; requires n > 0.
inline double nearest_rank_percentile(std::vector<double> values, unsigned percent) {
  if (values.empty()) fail(ErrorCode::EmptyInput, "percentile of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t rank = std::max<std::size_t>(1, nearest_rank(values.size(), percent));
  return values[rank - 1];
}

struct AlertDecision {
  double score = 0.0;
  double threshold = 0.0;
  bool alert = false;
  std::size_t history_size = 0;
};

/// Alerts when the score falls strictly below the 20th-percentile score of
/// the history. Non-finite history entries are ignored; an empty history
/// never alerts and reports the score itself as the threshold.
inline AlertDecision alert_check(double score, std::span<const double> history) {
  std::vector<double> h;
  h.reserve(history.size());
  for (double v : history) {
    if (std::isfinite(v)) h.push_back(v);
  }
  AlertDecision d;
  d.score = score;
  d.history_size = h.size();
  if (h.empty()) {
    d.threshold = score;
    return d;
  }
  d.threshold = nearest_rank_percentile(std::move(h), kAlertPercentile);
  d.alert = score < d.threshold;
  return d;
}

struct CategoryAlert {
  AlertDecision decision;       // in category-normalised units
  double category_median = 1.0;  // divisor applied to score and history
};

/// alert_check after dividing score and history by the history's median, so
/// scores from categories with different typical levels are comparable.
/// With a non-positive median the raw values are compared.
inline CategoryAlert category_alert_check(double score, std::span<const double> history) {
  std::vector<double> h;
  for (double v : history) {
    if (std::isfinite(v)) h.push_back(v);
  }
  CategoryAlert out;
  if (!h.empty()) {
    const double m = data::median(h);
    if (m > 0.0) out.category_median = m;
  }
  for (double& v : h) v /= out.category_median;
  out.decision = alert_check(score / out.category_median, h);
  return out;
}

}  // namespace vidpop::service
