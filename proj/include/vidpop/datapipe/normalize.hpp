#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "vidpop/datapipe/record.hpp"
#include "vidpop/error.hpp"

namespace vidpop::data {

enum class Popularity { unpopular = 0, popular = 1 };

/// Views per channel like.
inline double normalize_views(std::uint64_t views, std::uint64_t likes) {
  if (likes == 0) fail(ErrorCode::MissingChannelStats, "channel has zero likes");
  return static_cast<double>(views) / static_cast<double>(likes);
}

/// Median; the mean of the two middle values for even counts.
inline double median(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::EmptyDataset, "median of an empty sample");
  std::vector<double> v(values.begin(), values.end());
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2 == 1) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

struct MedianSplit {
  std::vector<Popularity> labels;
  double median = 0.0;
};

/// popular iff score > median (ties go to unpopular).
inline MedianSplit label_by_median(std::span<const double> scores) {
  if (scores.empty()) fail(ErrorCode::EmptyDataset, "cannot label an empty score list");
  MedianSplit out;
  out.median = median(scores);
  out.labels.reserve(scores.size());
  for (double s : scores) out.labels.push_back(s > out.median ? Popularity::popular : Popularity::unpopular);
  return out;
}

/// Divides each score by the median score of its category.
inline std::vector<double> category_normalize(std::span<const double> scores,
                                              std::span<const std::string> categories) {
  if (scores.size() != categories.size()) {
    fail(ErrorCode::ShapeError, "scores and categories differ in length");
  }
  std::map<std::string, std::vector<double>> groups;
  for (std::size_t i = 0; i < scores.size(); ++i) groups[categories[i]].push_back(scores[i]);
  std::map<std::string, double> medians;
  for (const auto& [cat, vals] : groups) {
    const double m = median(vals);
    if (!(m > 0.0)) fail(ErrorCode::DegenerateCategory, "category '" + cat + "' has non-positive median");
    medians[cat] = m;
  }
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores[i] / medians[categories[i]];
  return out;
}

struct LabeledExample {
  VideoRecord record;
  double normalized_score = 0.0;
  Popularity label = Popularity::unpopular;
};

struct LabeledCorpus {
  std::vector<LabeledExample> examples;
  double median_used = 0.0;
};

struct LabelingOptions {
  /// Additionally divide by the tier-1 category median before the split.
  bool category_debias = false;
};

/// Joins channel likes (inline value first, then the table), normalizes,
/// optionally de-biases by category and labels by the median split.
inline LabeledCorpus build_labeled_corpus(const Corpus& corpus, const ChannelTable& channels,
                                          const LabelingOptions& opt = {}) {
  if (corpus.empty()) fail(ErrorCode::EmptyDataset, "corpus is empty");
  std::vector<double> scores;
  std::vector<std::string> cats;
  scores.reserve(corpus.size());
  for (const auto& r : corpus.records()) {
    std::uint64_t likes = 0;
    if (r.channel_likes) {
      likes = *r.channel_likes;
    } else if (auto it = channels.find(r.channel_id); it != channels.end()) {
      likes = it->second;
    } else {
      fail(ErrorCode::MissingChannelStats, "no likes for channel '" + r.channel_id + "' (video " + r.video_id + ")");
    }
    if (likes == 0) fail(ErrorCode::MissingChannelStats, "channel '" + r.channel_id + "' has zero likes");
    scores.push_back(normalize_views(r.views, likes));
    cats.push_back(r.category.tier1);
  }
  if (opt.category_debias) scores = category_normalize(scores, cats);
  const MedianSplit split = label_by_median(scores);
  LabeledCorpus out;
  out.median_used = split.median;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out.examples.push_back({corpus.records()[i], scores[i], split.labels[i]});
  }
  return out;
}

}  // namespace vidpop::data
