#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "vidpop/error.hpp"
#include "vidpop/nnkern/checkpoint.hpp"

namespace vidpop::data {

/// count x dim matrix of single-precision features, row-major.
struct FeatureMatrix {
  std::uint32_t dim = 0;
  std::uint32_t count = 0;
  std::vector<float> values;

  std::span<const float> row(std::size_t i) const {
    return std::span<const float>(values).subspan(i * dim, dim);
  }

  std::vector<double> row_as_double(std::size_t i) const {
    const auto r = row(i);
    return std::vector<double>(r.begin(), r.end());
  }

  std::vector<std::vector<double>> rows_as_double() const {
    std::vector<std::vector<double>> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(row_as_double(i));
    return out;
  }

  static FeatureMatrix from_rows(const std::vector<std::vector<double>>& rows) {
    FeatureMatrix m;
    m.count = static_cast<std::uint32_t>(rows.size());
    m.dim = rows.empty() ? 0 : static_cast<std::uint32_t>(rows[0].size());
    m.values.reserve(static_cast<std::size_t>(m.count) * m.dim);
    for (const auto& r : rows) {
      if (r.size() != m.dim) fail(ErrorCode::ShapeError, "feature rows have unequal lengths");
      for (double v : r) m.values.push_back(static_cast<float>(v));
    }
    return m;
  }

  friend bool operator==(const FeatureMatrix&, const FeatureMatrix&) = default;
};

inline constexpr char kFvecMagic[4] = {'F', 'V', 'C', '1'};

/// "FVC1", u32 dim, u32 count, then count*dim f32 values, little-endian.
inline std::string encode_feature_file(const FeatureMatrix& m) {
  if (m.values.size() != static_cast<std::size_t>(m.dim) * m.count) {
    fail(ErrorCode::ShapeError, "feature matrix payload does not match dim x count");
  }
  std::string out(kFvecMagic, 4);
  nn::detail::put_u32(out, m.dim);
  nn::detail::put_u32(out, m.count);
  for (float v : m.values) nn::detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  return out;
}

inline FeatureMatrix decode_feature_file(const std::string& bytes) {
  if (bytes.size() < 4 || bytes.compare(0, 4, kFvecMagic, 4) != 0) {
    fail(ErrorCode::FormatError, "feature file: bad magic");
  }
  nn::detail::ByteReader rd(bytes, "feature file");
  rd.bytes(4);
  FeatureMatrix m;
  m.dim = rd.u32();
  m.count = rd.u32();
  const std::size_t n = static_cast<std::size_t>(m.dim) * m.count;
  if (rd.remaining() != n * 4) {
    fail(ErrorCode::FormatError, rd.remaining() < n * 4 ? "feature file: truncated payload"
                                                        : "feature file: trailing bytes after payload");
  }
  m.values.resize(n);
  for (float& v : m.values) v = std::bit_cast<float>(rd.u32());
  return m;
}

inline void write_feature_file(const std::filesystem::path& path, const FeatureMatrix& m) {
  nn::detail::write_file(path, encode_feature_file(m));
}

inline FeatureMatrix read_feature_file(const std::filesystem::path& path) {
  return decode_feature_file(nn::detail::read_file(path));
}

}  // namespace vidpop::data
