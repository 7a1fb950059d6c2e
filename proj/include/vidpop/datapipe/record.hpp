#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "vidpop/error.hpp"

namespace vidpop::data {

using Timestamp = std::chrono::sys_seconds;

struct Category {
  std::string tier1;
  std::string tier2;

  friend bool operator==(const Category&, const Category&) = default;
};

/// One archived video. `shares` and `comments` are optional in the corpus
/// file and default to zero; `channel_likes` may be inlined instead of
/// coming from a separate channel-stats file.
struct VideoRecord {
  std::string video_id;
  std::string title;
  std::string channel_id;
  std::uint64_t views = 0;
  Category category;
  std::vector<std::string> tags;
  std::optional<std::string> features_path;
  Timestamp published_at{};
  std::uint64_t shares = 0;
  std::uint64_t comments = 0;
  std::optional<std::uint64_t> channel_likes;
};

struct ChannelStats {
  std::string channel_id;
  std::uint64_t likes = 0;
};

/// Parses "YYYY-MM-DDTHH:MM:SSZ".
inline Timestamp parse_timestamp(const std::string& s) {
  int y = 0;
  unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%4d-%2u-%2uT%2u:%2u:%2u%c", &y, &mo, &d, &h, &mi, &sec, &tail) != 7 || tail != 'Z' ||
      s.size() != 20) {
    fail(ErrorCode::FormatError, "bad UTC timestamp '" + s + "' (want YYYY-MM-DDTHH:MM:SSZ)");
  }
  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{mo}, day{d}};
  if (!ymd.ok() || h > 23 || mi > 59 || sec > 59) fail(ErrorCode::FormatError, "bad UTC timestamp '" + s + "'");
  return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec};
}

inline std::string format_timestamp(Timestamp t) {
  using namespace std::chrono;
  const auto days = floor<std::chrono::days>(t);
  const year_month_day ymd{days};
  const hh_mm_ss hms{t - days};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02lldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long long>(hms.seconds().count()));
  return buf;
}

inline void to_json(nlohmann::json& j, const VideoRecord& r) {
  j = nlohmann::json{{"video_id", r.video_id},
                     {"title", r.title},
                     {"channel_id", r.channel_id},
                     {"views", r.views},
                     {"category", {{"tier1", r.category.tier1}, {"tier2", r.category.tier2}}},
                     {"tags", r.tags},
                     {"published_at", format_timestamp(r.published_at)},
                     {"shares", r.shares},
                     {"comments", r.comments}};
  if (r.features_path) j["features_path"] = *r.features_path;
  if (r.channel_likes) j["channel_likes"] = *r.channel_likes;
}

inline void from_json(const nlohmann::json& j, VideoRecord& r) {
  r.video_id = j.at("video_id").get<std::string>();
  r.title = j.at("title").get<std::string>();
  r.channel_id = j.at("channel_id").get<std::string>();
  if (j.at("views").is_number_integer() && j.at("views").get<std::int64_t>() < 0) {
    fail(ErrorCode::FormatError, "negative view count for " + r.video_id);
  }
  r.views = j.at("views").get<std::uint64_t>();
  const auto& cat = j.at("category");
  r.category = {cat.at("tier1").get<std::string>(), cat.at("tier2").get<std::string>()};
  r.tags = j.value("tags", std::vector<std::string>{});
  if (j.contains("features_path") && !j["features_path"].is_null()) {
    r.features_path = j["features_path"].get<std::string>();
  }
  r.published_at = parse_timestamp(j.at("published_at").get<std::string>());
  r.shares = j.value("shares", std::uint64_t{0});
  r.comments = j.value("comments", std::uint64_t{0});
  if (j.contains("channel_likes") && !j["channel_likes"].is_null()) {
    r.channel_likes = j["channel_likes"].get<std::uint64_t>();
  }
}

/// Immutable collection of records with unique ids.
class Corpus {
 public:
  Corpus() = default;
  explicit Corpus(std::vector<VideoRecord> records) : records_(std::move(records)) {
    for (std::size_t i = 0; i < records_.size(); ++i) {
      if (records_[i].video_id.empty()) fail(ErrorCode::FormatError, "empty video_id at record " + std::to_string(i));
      if (!by_id_.emplace(records_[i].video_id, i).second) {
        fail(ErrorCode::FormatError, "duplicate video_id " + records_[i].video_id);
      }
    }
  }

  const std::vector<VideoRecord>& records() const { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }

  const VideoRecord* find(const std::string& id) const {
    auto it = by_id_.find(id);
    return it == by_id_.end() ? nullptr : &records_[it->second];
  }

 private:
  std::vector<VideoRecord> records_;
  std::unordered_map<std::string, std::size_t> by_id_;
};

namespace detail {

template <class Fn>
void for_each_json_line(const std::filesystem::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::IoError, "cannot open " + path.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      fn(nlohmann::json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::FormatError, path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

}  // namespace detail

inline Corpus load_corpus(const std::filesystem::path& path) {
  std::vector<VideoRecord> records;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) { records.push_back(j.get<VideoRecord>()); });
  return Corpus(std::move(records));
}

inline void save_corpus(const std::filesystem::path& path, const Corpus& corpus) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  for (const auto& r : corpus.records()) out << nlohmann::json(r).dump() << '\n';
}

using ChannelTable = std::unordered_map<std::string, std::uint64_t>;

inline ChannelTable load_channel_stats(const std::filesystem::path& path) {
  ChannelTable table;
  detail::for_each_json_line(path, [&](const nlohmann::json& j) {
    table[j.at("channel_id").get<std::string>()] = j.at("likes").get<std::uint64_t>();
  });
  return table;
}

}  // namespace vidpop::data
