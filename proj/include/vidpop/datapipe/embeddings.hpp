#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <zlib.h>

#include "vidpop/error.hpp"

namespace vidpop::data {

struct EmbeddingLookup {
  std::vector<double> vector;
  bool oov = false;
};

/// token -> fixed-dimension vector.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  explicit EmbeddingTable(std::size_t dim) : dim_(dim) {
    if (dim == 0) fail(ErrorCode::ConfigError, "embedding dimension must be positive");
  }

  std::size_t dim() const { return dim_; }
  std::size_t size() const { return entries_.size(); }
  bool contains(const std::string& token) const { return entries_.count(token) > 0; }

  void add(const std::string& token, std::vector<double> vec) {
    if (vec.size() != dim_) {
      fail(ErrorCode::ShapeError, "embedding for '" + token + "' has " + std::to_string(vec.size()) +
                                      " components, table dim is " + std::to_string(dim_));
    }
    if (!entries_.emplace(token, std::move(vec)).second) {
      fail(ErrorCode::FormatError, "duplicate embedding token '" + token + "'");
    }
  }

  /// Inserts or overwrites.
  void set(const std::string& token, std::vector<double> vec) {
    if (vec.size() != dim_) fail(ErrorCode::ShapeError, "embedding for '" + token + "' has wrong dimension");
    entries_[token] = std::move(vec);
  }

  /// Unknown tokens map to the zero vector with the OOV flag set.
  EmbeddingLookup lookup(const std::string& token) const {
    auto it = entries_.find(token);
    if (it == entries_.end()) return {std::vector<double>(dim_, 0.0), true};
    return {it->second, false};
  }

  std::vector<std::string> tokens() const {
    std::vector<std::string> out;
    out.reserve(entries_.size());
    for (const auto& [t, v] : entries_) out.push_back(t);
    std::sort(out.begin(), out.end());
    return out;
  }

  /// CRC-32 over the sorted vocabulary and the dimension; identifies which
  /// table a model was trained against.
  std::string vocab_hash() const {
    uLong crc = crc32(0L, Z_NULL, 0);
    const std::string header = std::to_string(dim_) + "\n";
    crc = crc32(crc, reinterpret_cast<const Bytef*>(header.data()), static_cast<uInt>(header.size()));
    for (const auto& t : tokens()) {
      const std::string line = t + "\n";
      crc = crc32(crc, reinterpret_cast<const Bytef*>(line.data()), static_cast<uInt>(line.size()));
    }
    char buf[9];
    std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
    return buf;
  }

  /// Mean of the in-vocabulary token vectors (zero vector if none are known).
  std::vector<double> average(const std::vector<std::string>& tokens) const {
    std::vector<double> out(dim_, 0.0);
    std::size_t known = 0;
    for (const auto& t : tokens) {
      auto it = entries_.find(t);
      if (it == entries_.end()) continue;
      for (std::size_t i = 0; i < dim_; ++i) out[i] += it->second[i];
      ++known;
    }
    if (known > 0) {
      for (double& v : out) v /= static_cast<double>(known);
    }
    return out;
  }

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> entries_;
};

namespace detail {

inline std::vector<std::string> split_spaces(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

inline bool parse_double(const std::string& s, double& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline bool parse_size(const std::string& s, std::size_t& out) {
  const char* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

/// Parses "token v1 ... vD" lines. A leading "count dim" header line (as in
/// fastText .vec files) is accepted; its dim must equal expected_dim.
/// Any line with the wrong number of values is a FormatError naming the
/// 1-based line number.
inline EmbeddingTable parse_embeddings(std::istream& in, std::size_t expected_dim) {
  EmbeddingTable table(expected_dim);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const auto fields = detail::split_spaces(line);
    if (fields.empty()) continue;
    if (lineno == 1 && fields.size() == 2 && expected_dim != 1) {
      std::size_t count = 0, dim = 0;
      if (detail::parse_size(fields[0], count) && detail::parse_size(fields[1], dim)) {
        if (dim != expected_dim) {
          fail(ErrorCode::ConfigError, "embedding file declares dim " + std::to_string(dim) + ", expected " +
                                           std::to_string(expected_dim));
        }
        continue;
      }
    }
    if (fields.size() != expected_dim + 1) {
      fail(ErrorCode::FormatError, "line " + std::to_string(lineno) + ": expected token plus " +
                                       std::to_string(expected_dim) + " values, got " +
                                       std::to_string(fields.size() - 1));
    }
    std::vector<double> vec(expected_dim);
    for (std::size_t i = 0; i < expected_dim; ++i) {
      if (!detail::parse_double(fields[i + 1], vec[i]) || !std::isfinite(vec[i])) {
        fail(ErrorCode::FormatError, "line " + std::to_string(lineno) + ": bad number '" + fields[i + 1] + "'");
      }
    }
    try {
      table.add(fields[0], std::move(vec));
    } catch (const Error& e) {
      fail(ErrorCode::FormatError, "line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return table;
}

inline EmbeddingTable load_embeddings(const std::filesystem::path& path, std::size_t expected_dim) {
  if (expected_dim == 0) fail(ErrorCode::ConfigError, "expected embedding dimension must be positive");
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  return parse_embeddings(in, expected_dim);
}

inline void save_embeddings(const std::filesystem::path& path, const EmbeddingTable& table) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.precision(17);
  for (const auto& t : table.tokens()) {
    out << t;
    for (double v : table.lookup(t).vector) out << ' ' << v;
    out << '\n';
  }
}

}  // namespace vidpop::data
