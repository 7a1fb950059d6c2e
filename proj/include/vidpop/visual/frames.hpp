#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "vidpop/error.hpp"

namespace vidpop::visual {

inline constexpr std::size_t kThumbnailFrames = 40;
inline constexpr std::size_t kOpeningFrames = 18;
inline constexpr double kOpeningWindowSeconds = 6.0;

/// k indices spread uniformly over N frames: floor(i (N-1) / (k-1)).
/// N <= k returns every frame; k == 1 returns the first frame.
inline std::vector<std::size_t> sample_frame_indices(std::size_t total_frames, std::size_t k = kThumbnailFrames) {
  if (total_frames == 0) fail(ErrorCode::EmptyVideo, "video has no frames");
  if (k == 0) fail(ErrorCode::ConfigError, "frame sample count must be positive");
  std::vector<std::size_t> out;
  if (total_frames <= k) {
    for (std::size_t i = 0; i < total_frames; ++i) out.push_back(i);
    return out;
  }
  if (k == 1) return {0};
  out.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    out.push_back(static_cast<std::size_t>(static_cast<std::uint64_t>(i) * (total_frames - 1) / (k - 1)));
  }
  return out;
}

/// 18 indices over the first min(6 s, duration): floor(i W fps / 18), clamped
/// to the last frame ceil(duration fps) - 1.
inline std::vector<std::size_t> opening_frame_indices(double fps, double duration_s) {
  if (!(fps > 0.0) || !std::isfinite(fps)) fail(ErrorCode::ConfigError, "fps must be positive");
  if (!(duration_s > 0.0) || !std::isfinite(duration_s)) {
    fail(ErrorCode::ConfigError, "duration must be positive");
  }
  const double window = std::min(kOpeningWindowSeconds, duration_s);
  const double frames = std::ceil(duration_s * fps - 1e-9);
  const auto last = static_cast<std::size_t>(std::max(0.0, frames - 1.0));
  std::vector<std::size_t> out(kOpeningFrames);
  for (std::size_t i = 0; i < kOpeningFrames; ++i) {
    // The slack keeps exact products such as (i/3 s) * 30 fps from landing just below an integer.
    const double pos = std::floor(static_cast<double>(i) * window * fps / static_cast<double>(kOpeningFrames) + 1e-9);
    out[i] = std::min(last, static_cast<std::size_t>(pos));
  }
  return out;
}

/// Index of the highest score; the lowest index wins ties.
inline std::size_t recommend_thumbnail(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyInput, "no frame scores");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i) {
    if (scores[i] > scores[best]) best = i;
  }
  return best;
}

}  // namespace vidpop::visual
