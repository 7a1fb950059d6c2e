#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidpop/error.hpp"

namespace vidpop::service {

/// Append-only per-category score history, optionally mirrored to a JSONL
/// file ({"category": ..., "score": ...} per line). Writes are serialised.
class ScoreLog {
 public:
  ScoreLog() = default;

  explicit ScoreLog(std::filesystem::path path) : path_(std::move(path)) {
    if (!std::filesystem::exists(*path_)) return;
    std::ifstream in(*path_);
    if (!in) fail(ErrorCode::IoError, "cannot open score log " + path_->string());
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        scores_[j.at("category").get<std::string>()].push_back(j.at("score").get<double>());
      } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::FormatError, path_->string() + ":" + std::to_string(lineno) + ": " + e.what());
      }
    }
  }

  void append(const std::string& category, double score) {
    if (!std::isfinite(score)) fail(ErrorCode::ConfigError, "score must be finite");
    std::lock_guard lock(mu_);
    if (path_) {
      std::ofstream out(*path_, std::ios::app);
      if (!out) fail(ErrorCode::IoError, "cannot append to score log " + path_->string());
      out << nlohmann::json{{"category", category}, {"score", score}}.dump() << '\n';
    }
    scores_[category].push_back(score);
  }

  std::vector<double> history(const std::string& category) const {
    std::lock_guard lock(mu_);
    auto it = scores_.find(category);
    return it == scores_.end() ? std::vector<double>{} : it->second;
  }

  std::map<std::string, std::size_t> sizes() const {
    std::lock_guard lock(mu_);
    std::map<std::string, std::size_t> out;
    for (const auto& [c, v] : scores_) out[c] = v.size();
    return out;
  }

 private:
  std::optional<std::filesystem::path> path_;
  mutable std::mutex mu_;
  std::map<std::string, std::vector<double>> scores_;
};

}  // namespace vidpop::service
