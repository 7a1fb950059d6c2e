#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "vidpop/error.hpp"

namespace vidpop::headline {

inline constexpr std::size_t kMaxTokens = 30;

namespace detail {

// ASCII letters and digits are word characters; so is every byte of a
// multi-byte UTF-8 sequence, which keeps accented words intact.
constexpr bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
}

}  // namespace detail

/// Lowercased tokens split on runs of non-alphanumerics, at most max_tokens.
inline std::vector<std::string> tokenize(std::string_view title, std::size_t max_tokens = kMaxTokens) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty() && out.size() < max_tokens) out.push_back(cur);
    cur.clear();
  };
  for (char ch : title) {
    const auto c = static_cast<unsigned char>(ch);
    if (detail::is_word_byte(c)) {
      cur.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : ch);
    } else {
      flush();
    }
  }
  flush();
  if (out.empty()) fail(ErrorCode::EmptyTitle, "title has no word characters");
  return out;
}

}  // namespace vidpop::headline
