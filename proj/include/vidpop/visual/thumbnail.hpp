#pragma once

#include <cmath>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "vidpop/datapipe/split.hpp"
#include "vidpop/nnkern.hpp"
#include "vidpop/visual/frames.hpp"
#include "vidpop/visual/tinycnn.hpp"

namespace vidpop::visual {

/// sigmoid(w . f_j + b) per frame feature vector.
inline std::vector<double> score_frames(const std::vector<nn::Vec>& features, const nn::LogisticHead& head) {
  std::vector<double> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(head.probability(f));
  return out;
}

struct ThumbnailRecommendation {
  std::vector<double> scores;
  std::size_t best_frame = 0;
};

inline ThumbnailRecommendation recommend_from_features(const std::vector<nn::Vec>& features,
                                                       const nn::LogisticHead& head) {
  ThumbnailRecommendation r;
  r.scores = score_frames(features, head);
  r.best_frame = recommend_thumbnail(r.scores);
  return r;
}

/// Last-layer model: a dense+sigmoid head over frozen backbone features.
/// With the built-in backbone it also scores raw images.
struct ThumbnailModel {
  nn::LogisticHead head;
  std::optional<TinyCnn> backbone;

  std::size_t feature_dim() const { return head.input_dim(); }
  std::string backbone_name() const { return backbone ? "tinycnn" : "external"; }

  nn::ParamRefs params() {
    nn::ParamRefs out;
    if (backbone) out = backbone->params();
    nn::append(out, head.params());
    return out;
  }

  ThumbnailRecommendation recommend_images(const std::vector<Image>& frames) const {
    if (!backbone) fail(ErrorCode::ConfigError, "thumbnail model has no image backbone; send feature vectors");
    return recommend_from_features(tinycnn_features(frames, *backbone), head);
  }
};

struct HeadTrainResult {
  nn::LogisticHead head;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
  data::SplitSizes sizes;
};

/// Fine-tunes only the head: 80/10/10 split seeded by cfg.seed.
inline HeadTrainResult train_thumbnail_head(const std::vector<nn::Example<nn::Vec>>& data, std::size_t feature_dim,
                                            const nn::TrainConfig& cfg, const data::SplitRatios& ratios = {}) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no thumbnail examples");
  for (const auto& e : data) nn::require_dim(e.input.size(), feature_dim, "thumbnail feature");
  const auto split = data::split_dataset(data, ratios, cfg.seed);
  HeadTrainResult r{nn::LogisticHead(feature_dim, "thumbnail.head"), {}, 0.0,
                    {split.train.size(), split.validation.size(), split.test.size()}};
  r.history = nn::train_classifier<nn::LogisticHead, nn::Vec>(r.head, split.train, split.validation, cfg);
  r.test_accuracy = nn::accuracy<nn::LogisticHead, nn::Vec>(r.head, split.test);
  return r;
}

struct CnnTrainResult {
  CnnClassifier model;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
  data::SplitSizes sizes;
};

/// Trains backbone and head end to end on images; 80/10/10 split seeded by cfg.seed.
inline CnnTrainResult train_cnn_classifier(const std::vector<nn::Example<Image>>& data, std::size_t in_channels,
                                           const nn::TrainConfig& cfg, const data::SplitRatios& ratios = {}) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no training images");
  const auto split = data::split_dataset(data, ratios, cfg.seed);
  CnnTrainResult r{CnnClassifier(in_channels), {}, 0.0, {split.train.size(), split.validation.size(), split.test.size()}};
  r.history = nn::train_classifier<CnnClassifier, Image>(r.model, split.train, split.validation, cfg);
  r.test_accuracy = nn::accuracy<CnnClassifier, Image>(r.model, split.test);
  return r;
}

/// Two Gaussian blobs at +/- separation/2 along a random unit direction,
/// unit variance per component. Labels alternate.
inline std::vector<nn::Example<nn::Vec>> make_feature_blobs(std::size_t n, std::size_t dim, double separation,
                                                            std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  nn::Vec dir(dim);
  double n2 = 0.0;
  for (double& v : dir) {
    v = g(rng);
    n2 += v * v;
  }
  for (double& v : dir) v /= std::sqrt(n2);
  std::vector<nn::Example<nn::Vec>> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const double sign = label ? 0.5 : -0.5;
    nn::Vec x(dim);
    for (std::size_t j = 0; j < dim; ++j) x[j] = sign * separation * dir[j] + g(rng);
    out.push_back({std::move(x), label});
  }
  return out;
}

}  // namespace vidpop::visual
