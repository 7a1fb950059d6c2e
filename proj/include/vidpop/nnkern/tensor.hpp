#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vidpop/error.hpp"

namespace vidpop::nn {

using Vec = std::vector<double>;

/// Dense row-major tensor of doubles with an explicit shape.
class Tensor {
 public:
  Tensor() = default;

  explicit Tensor(std::vector<std::size_t> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

  Tensor(std::vector<std::size_t> shape, std::vector<double> data)
      : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
      fail(ErrorCode::ShapeError, "tensor data length " + std::to_string(data_.size()) +
                                      " does not match shape product " +
                                      std::to_string(element_count(shape_)));
    }
  }

  const std::vector<std::size_t>& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double* data() noexcept { return data_.data(); }
  const double* data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }
  const std::vector<double>& storage() const noexcept { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // Rank-2 access.
  double& operator()(std::size_t r, std::size_t c) { return data_[r * shape_[1] + c]; }
  const double& operator()(std::size_t r, std::size_t c) const { return data_[r * shape_[1] + c]; }

  // Rank-3 access (channel, row, col).
  double& operator()(std::size_t k, std::size_t r, std::size_t c) {
    return data_[(k * shape_[1] + r) * shape_[2] + c];
  }
  const double& operator()(std::size_t k, std::size_t r, std::size_t c) const {
    return data_[(k * shape_[1] + r) * shape_[2] + c];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }

  bool all_finite() const {
    for (double v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  static std::size_t element_count(const std::vector<std::size_t>& shape) {
    if (shape.empty()) return 0;
    for (std::size_t e : shape) {
      if (e == 0) fail(ErrorCode::ShapeError, "tensor extents must be positive");
    }
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
  }

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  std::vector<std::size_t> shape_;
  std::vector<double> data_;
};

inline std::string shape_string(const std::vector<std::size_t>& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

inline void require_dim(std::size_t got, std::size_t expected, const char* what) {
  if (got != expected) {
    fail(ErrorCode::ShapeError, std::string(what) + ": expected dimension " +
                                    std::to_string(expected) + ", got " + std::to_string(got));
  }
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// y = M x for a rank-2 tensor M (rows x cols).
inline Vec matvec(const Tensor& m, std::span<const double> x) {
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  Vec y(rows, 0.0);
  const double* p = m.data();
  for (std::size_t r = 0; r < rows; ++r) {
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) s += p[r * cols + c] * x[c];
    y[r] = s;
  }
  return y;
}

// dx += M^T dy
inline void matvec_transpose_add(const Tensor& m, std::span<const double> dy, std::span<double> dx) {
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  const double* p = m.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double g = dy[r];
    if (g == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) dx[c] += p[r * cols + c] * g;
  }
}

// G += dy x^T
inline void outer_add(Tensor& g, std::span<const double> dy, std::span<const double> x) {
  const std::size_t rows = g.extent(0), cols = g.extent(1);
  double* p = g.data();
  for (std::size_t r = 0; r < rows; ++r) {
    const double d = dy[r];
    if (d == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) p[r * cols + c] += d * x[c];
  }
}

}  // namespace vidpop::nn
