#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vidpop {

enum class ErrorCode {
  EmptyInput,
  ShapeError,
  NumericalError,
  EmptyDataset,
  ConfigError,
  FormatError,
  IoError,
  MissingChannelStats,
  DegenerateCategory,
  EmptyTitle,
  EmptyVideo,
  NoVideos,
  EmptyGroup,
  DegenerateBaseline,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::ShapeError: return "ShapeError";
    case ErrorCode::NumericalError: return "NumericalError";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MissingChannelStats: return "MissingChannelStats";
    case ErrorCode::DegenerateCategory: return "DegenerateCategory";
    case ErrorCode::EmptyTitle: return "EmptyTitle";
    case ErrorCode::EmptyVideo: return "EmptyVideo";
    case ErrorCode::NoVideos: return "NoVideos";
    case ErrorCode::EmptyGroup: return "EmptyGroup";
    case ErrorCode::DegenerateBaseline: return "DegenerateBaseline";
  }
  return "Unknown";
}

/// The single exception type thrown by the library. `code()` identifies the
/// failure class; the message carries the details (offending path, line,
/// category, epoch, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace vidpop
