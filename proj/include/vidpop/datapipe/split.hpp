#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <vector>

#include "vidpop/error.hpp"

namespace vidpop::data {

struct SplitRatios {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

template <class T>
struct DatasetSplit {
  std::vector<T> train;
  std::vector<T> validation;
  std::vector<T> test;
};

struct SplitSizes {
  std::size_t train = 0, validation = 0, test = 0;
};

inline void validate(const SplitRatios& r) {
  if (!(r.train >= 0.0 && r.validation >= 0.0 && r.test >= 0.0) ||
      std::abs(r.train + r.validation + r.test - 1.0) > 1e-9) {
    fail(ErrorCode::ConfigError, "split ratios must be nonnegative and sum to 1");
  }
}

/// Validation and test take floor(ratio * n); the remainder goes to train.
/// The 1e-9 slack absorbs representation error such as 0.1 * 10.
inline SplitSizes split_sizes(std::size_t n, const SplitRatios& r) {
  validate(r);
  const auto cut = [n](double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 1e-9));
  };
  SplitSizes s;
  s.validation = cut(r.validation);
  s.test = cut(r.test);
  s.train = n - s.validation - s.test;
  return s;
}

/// Seeded shuffle, then contiguous [train | validation | test] cut.
template <class T>
DatasetSplit<T> split_dataset(const std::vector<T>& records, const SplitRatios& ratios, std::uint64_t seed) {
  const SplitSizes sz = split_sizes(records.size(), ratios);
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  DatasetSplit<T> out;
  out.train.reserve(sz.train);
  out.validation.reserve(sz.validation);
  out.test.reserve(sz.test);
  for (std::size_t k = 0; k < order.size(); ++k) {
    const T& item = records[order[k]];
    if (k < sz.train) {
      out.train.push_back(item);
    } else if (k < sz.train + sz.validation) {
      out.validation.push_back(item);
    } else {
      out.test.push_back(item);
    }
  }
  return out;
}

}  // namespace vidpop::data
