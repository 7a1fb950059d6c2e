#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vidpop/datapipe/normalize.hpp"
#include "vidpop/datapipe/record.hpp"
#include "vidpop/error.hpp"
#include "vidpop/nnkern/checkpoint.hpp"

namespace vidpop::archive {

/// ASCII-lowercased with surrounding whitespace removed.
inline std::string normalize_tag(std::string_view tag) {
  const auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  std::size_t b = 0, e = tag.size();
  while (b < e && is_space(tag[b])) ++b;
  while (e > b && is_space(tag[e - 1])) --e;
  std::string out(tag.substr(b, e - b));
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

/// tag -> sorted, duplicate-free video ids.
class TagIndex {
 public:
  using Map = std::map<std::string, std::vector<std::string>>;

  TagIndex() = default;
  explicit TagIndex(Map m) : map_(std::move(m)) {}

  const Map& entries() const { return map_; }
  bool empty() const { return map_.empty(); }
  std::size_t size() const { return map_.size(); }

  std::vector<std::string> vocabulary() const {
    std::vector<std::string> out;
    out.reserve(map_.size());
    for (const auto& [t, ids] : map_) out.push_back(t);
    return out;
  }

  const std::vector<std::string>* find(std::string_view tag) const {
    auto it = map_.find(normalize_tag(tag));
    return it == map_.end() ? nullptr : &it->second;
  }

  friend bool operator==(const TagIndex&, const TagIndex&) = default;

 private:
  Map map_;
};

inline TagIndex build_tag_index(const data::Corpus& corpus) {
  std::map<std::string, std::set<std::string>> sets;
  for (const auto& r : corpus.records()) {
    for (const auto& raw : r.tags) {
      std::string t = normalize_tag(raw);
      if (!t.empty()) sets[std::move(t)].insert(r.video_id);
    }
  }
  TagIndex::Map m;
  for (auto& [t, ids] : sets) m.emplace(t, std::vector<std::string>(ids.begin(), ids.end()));
  return TagIndex(std::move(m));
}

inline void save_tag_index(const std::filesystem::path& path, const TagIndex& index) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [t, ids] : index.entries()) j[t] = ids;
  nn::detail::write_file(path, j.dump(2) + "\n");
}

inline TagIndex load_tag_index(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(nn::detail::read_file(path));
    if (!j.is_object()) fail(ErrorCode::FormatError, path.string() + ": tag index must be a JSON object");
    TagIndex::Map m;
    for (const auto& [t, ids] : j.items()) {
      auto v = ids.get<std::vector<std::string>>();
      std::sort(v.begin(), v.end());
      v.erase(std::unique(v.begin(), v.end()), v.end());
      m.emplace(normalize_tag(t), std::move(v));
    }
    return TagIndex(std::move(m));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, path.string() + ": " + e.what());
  }
}

/// Classic edit distance (unit insert, delete, substitute) over bytes.
inline std::size_t levenshtein(std::string_view a, std::string_view b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

inline constexpr std::size_t kMaxSuggestions = 3;
inline constexpr std::size_t kSuggestionDistance = 2;

/// Up to three vocabulary tags within edit distance 2, nearest first, then
/// alphabetical.
inline std::vector<std::string> suggest_tags(const TagIndex& index, std::string_view tag) {
  const std::string q = normalize_tag(tag);
  std::vector<std::pair<std::size_t, std::string>> hits;
  for (const auto& [t, ids] : index.entries()) {
    const std::size_t d = levenshtein(q, t);
    if (d <= kSuggestionDistance && t != q) hits.emplace_back(d, t);
  }
  std::sort(hits.begin(), hits.end());
  std::vector<std::string> out;
  for (std::size_t i = 0; i < hits.size() && i < kMaxSuggestions; ++i) out.push_back(hits[i].second);
  return out;
}

struct TagQuery {
  std::vector<data::VideoRecord> records;
  std::vector<std::string> suggestions;  // only when nothing matched
};

/// Case-insensitive exact tag match; unknown tags come back empty with
/// spelling suggestions. Records follow the index's sorted id order.
inline TagQuery query_by_tag(const TagIndex& index, const data::Corpus& corpus, std::string_view tag) {
  TagQuery q;
  if (const auto* ids = index.find(tag)) {
    for (const auto& id : *ids) {
      if (const auto* r = corpus.find(id)) q.records.push_back(*r);
    }
  }
  if (q.records.empty()) q.suggestions = suggest_tags(index, tag);
  return q;
}

enum class Metric { views, shares, comments };

inline Metric parse_metric(std::string_view name) {
  const std::string n = normalize_tag(name);
  if (n == "views") return Metric::views;
  if (n == "shares") return Metric::shares;
  if (n == "comments") return Metric::comments;
  fail(ErrorCode::ConfigError, "unknown metric '" + std::string(name) + "' (use views, shares or comments)");
}

constexpr const char* metric_name(Metric m) {
  switch (m) {
    case Metric::views: return "views";
    case Metric::shares: return "shares";
    case Metric::comments: return "comments";
  }
  return "?";
}

inline std::uint64_t metric_value(const data::VideoRecord& r, Metric m) {
  switch (m) {
    case Metric::views: return r.views;
    case Metric::shares: return r.shares;
    case Metric::comments: return r.comments;
  }
  return 0;
}

struct TagStats {
  std::string tag;
  Metric metric = Metric::views;
  std::size_t count = 0;
  double mean = 0.0;
  double median = 0.0;
  std::uint64_t total = 0;
};

inline TagStats tag_stats(const TagIndex& index, const data::Corpus& corpus, std::string_view tag,
                          std::string_view metric) {
  const Metric m = parse_metric(metric);
  const TagQuery q = query_by_tag(index, corpus, tag);
  if (q.records.empty()) fail(ErrorCode::NoVideos, "no videos tagged '" + std::string(tag) + "'");
  TagStats s;
  s.tag = normalize_tag(tag);
  s.metric = m;
  s.count = q.records.size();
  std::vector<double> vals;
  for (const auto& r : q.records) {
    const std::uint64_t v = metric_value(r, m);
    s.total += v;
    vals.push_back(static_cast<double>(v));
  }
  s.mean = static_cast<double>(s.total) / static_cast<double>(s.count);
  s.median = data::median(vals);
  return s;
}

}  // namespace vidpop::archive
