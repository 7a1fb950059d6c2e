#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidpop/error.hpp"
#include "vidpop/nnkern/checkpoint.hpp"

namespace vidpop::visual {

/// height x width x channels grid, row-major HWC, values in [0,1].
struct Image {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> data;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0)
      : height(h), width(w), channels(c), data(h * w * c, fill) {}

  double& at(std::size_t y, std::size_t x, std::size_t c = 0) { return data[(y * width + x) * channels + c]; }
  double at(std::size_t y, std::size_t x, std::size_t c = 0) const { return data[(y * width + x) * channels + c]; }

  friend bool operator==(const Image&, const Image&) = default;
};

namespace detail {

inline std::string next_header_token(const std::string& bytes, std::size_t& pos) {
  while (pos < bytes.size()) {
    const auto c = static_cast<unsigned char>(bytes[pos]);
    if (c == '#') {
      while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
    } else if (std::isspace(c)) {
      ++pos;
    } else {
      break;
    }
  }
  const std::size_t start = pos;
  while (pos < bytes.size() && !std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
  return bytes.substr(start, pos - start);
}

inline std::size_t header_number(const std::string& bytes, std::size_t& pos) {
  const std::string tok = next_header_token(bytes, pos);
  if (tok.empty() || !std::all_of(tok.begin(), tok.end(), [](char c) { return c >= '0' && c <= '9'; }) ||
      tok.size() > 9) {
    fail(ErrorCode::FormatError, "netpbm: bad header field '" + tok + "'");
  }
  return std::stoul(tok);
}

inline unsigned char to_byte(double v) {
  return static_cast<unsigned char>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

}  // namespace detail

/// Binary P6 (RGB) or P5 (gray) with maxval <= 255.
inline Image decode_netpbm(const std::string& bytes) {
  std::size_t pos = 0;
  const std::string magic = detail::next_header_token(bytes, pos);
  std::size_t channels = 0;
  if (magic == "P6") {
    channels = 3;
  } else if (magic == "P5") {
    channels = 1;
  } else {
    fail(ErrorCode::FormatError, "netpbm: unsupported magic '" + magic + "' (want P5 or P6)");
  }
  const std::size_t w = detail::header_number(bytes, pos);
  const std::size_t h = detail::header_number(bytes, pos);
  const std::size_t maxval = detail::header_number(bytes, pos);
  if (w == 0 || h == 0) fail(ErrorCode::FormatError, "netpbm: zero-sized image");
  if (maxval == 0 || maxval > 255) fail(ErrorCode::FormatError, "netpbm: only 8-bit maxval is supported");
  if (pos >= bytes.size()) fail(ErrorCode::FormatError, "netpbm: truncated payload");
  ++pos;  // single whitespace byte after maxval
  const std::size_t n = w * h * channels;
  if (bytes.size() - pos < n) fail(ErrorCode::FormatError, "netpbm: truncated payload");
  Image img(h, w, channels);
  for (std::size_t i = 0; i < n; ++i) {
    img.data[i] = static_cast<double>(static_cast<unsigned char>(bytes[pos + i])) / static_cast<double>(maxval);
  }
  return img;
}

inline std::string encode_netpbm(const Image& img) {
  if (img.channels != 1 && img.channels != 3) fail(ErrorCode::ShapeError, "netpbm needs 1 or 3 channels");
  std::string out = (img.channels == 3 ? "P6\n" : "P5\n") + std::to_string(img.width) + " " +
                    std::to_string(img.height) + "\n255\n";
  out.reserve(out.size() + img.data.size());
  for (double v : img.data) out.push_back(static_cast<char>(detail::to_byte(v)));
  return out;
}

inline Image read_image(const std::filesystem::path& path) {
  try {
    return decode_netpbm(nn::detail::read_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::IoError) throw;
    fail(e.code(), path.string() + ": " + e.what());
  }
}

inline void write_image(const std::filesystem::path& path, const Image& img) {
  nn::detail::write_file(path, encode_netpbm(img));
}

inline std::string frame_filename(std::size_t index, const char* ext = "ppm") {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%05zu.%s", index, ext);
  return buf;
}

/// Frame images (.ppm/.pgm) in a directory, in file-name order.
inline std::vector<std::filesystem::path> list_frames(const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    const auto ext = entry.path().extension();
    if (entry.is_regular_file() && (ext == ".ppm" || ext == ".pgm")) out.push_back(entry.path());
  }
  if (ec) fail(ErrorCode::IoError, "cannot list " + dir.string());
  std::sort(out.begin(), out.end());
  return out;
}

/// Per-pixel heat in [0,1] for one frame.
struct SaliencyMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> grid;
  std::size_t frame_index = 0;
  double raw_min = 0.0;  // before normalization
  double raw_max = 0.0;

  double at(std::size_t y, std::size_t x) const { return grid[y * width + x]; }
};

inline Image saliency_image(const SaliencyMap& m) {
  Image img(m.height, m.width, 1);
  img.data = m.grid;
  return img;
}

inline nlohmann::json saliency_sidecar(const SaliencyMap& m) {
  return {{"frame_index", m.frame_index}, {"min", m.raw_min}, {"max", m.raw_max}};
}

/// Writes the heat grid as 8-bit PGM plus "<path>.json" with frame_index and
/// the pre-normalization range.
inline void write_saliency(const std::filesystem::path& pgm_path, const SaliencyMap& m) {
  write_image(pgm_path, saliency_image(m));
  nn::detail::write_file(pgm_path.string() + ".json", saliency_sidecar(m).dump(2) + "\n");
}

}  // namespace vidpop::visual
