#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "vidpop/datapipe/split.hpp"
#include "vidpop/nnkern.hpp"
#include "vidpop/visual/frames.hpp"

namespace vidpop::visual {

using FrameFeatures = std::vector<nn::Vec>;

struct OpeningDims {
  std::size_t feature_dim = 2048;
  std::size_t projection_dim = 32;
  std::size_t attention_dim = 16;
};

struct OpeningForward {
  std::vector<nn::Vec> projected;
  nn::AttentionResult attention;
  double logit = 0.0;
};

/// Shared dense projection per frame -> additive attention over frames ->
/// dense -> sigmoid.
class OpeningModel {
 public:
  OpeningModel() = default;
  explicit OpeningModel(const OpeningDims& d)
      : dims_(d),
        projection_(d.feature_dim, d.projection_dim, "opening.projection", nn::LayerKind::embedding_projection),
        attention_(d.projection_dim, d.attention_dim, "opening.attention"),
        head_(d.projection_dim, 1, "opening.head") {}

  const OpeningDims& dims() const { return dims_; }

  void init(nn::Rng& rng) {
    projection_.init(rng);
    attention_.init(rng);
    head_.init(rng);
  }

  nn::ParamRefs params() {
    nn::ParamRefs out = projection_.params();
    nn::append(out, attention_.params());
    nn::append(out, head_.params());
    return out;
  }

  OpeningForward forward(const FrameFeatures& frames) const {
    if (frames.empty()) fail(ErrorCode::EmptyInput, "no frames");
    OpeningForward f;
    f.projected.reserve(frames.size());
    for (const auto& x : frames) f.projected.push_back(projection_.forward(x));
    f.attention = nn::attention_pool(f.projected, attention_);
    f.logit = head_.forward(f.attention.context)[0];
    return f;
  }

  double loss(const FrameFeatures& x, int label, nn::KinkProbe* = nullptr) const {
    return nn::bce_with_logit(forward(x).logit, label);
  }

  /// Backward of dL/dlogit; returns dL/dframe_t.
  std::vector<nn::Vec> backward(const FrameFeatures& x, const OpeningForward& f, double dlogit) {
    const nn::Vec dcontext = head_.backward(f.attention.context, std::span<const double>(&dlogit, 1));
    const std::vector<nn::Vec> dproj = nn::attention_backward(f.projected, f.attention, dcontext, attention_);
    std::vector<nn::Vec> dx(x.size());
    for (std::size_t t = 0; t < x.size(); ++t) dx[t] = projection_.backward(x[t], dproj[t]);
    return dx;
  }

  double accumulate(const FrameFeatures& x, int label) {
    const OpeningForward f = forward(x);
    backward(x, f, nn::sigmoid(f.logit) - label);
    return nn::bce_with_logit(f.logit, label);
  }

  int predict(const FrameFeatures& x) const { return forward(x).logit > 0.0 ? 1 : 0; }

  /// d logit / d frame_t, leaving the parameter gradients untouched.
  std::vector<nn::Vec> input_gradients(const FrameFeatures& x) const {
    OpeningModel scratch = *this;
    const OpeningForward f = scratch.forward(x);
    return scratch.backward(x, f, 1.0);
  }

 private:
  OpeningDims dims_;
  nn::Dense projection_;
  nn::AdditiveAttention attention_;
  nn::Dense head_;
};

static_assert(nn::Classifier<OpeningModel, FrameFeatures>);

struct OpeningScore {
  double probability_popular = 0.0;
  std::vector<double> frame_attention;  // 18 weights
};

inline void require_opening_frames(const FrameFeatures& frames, std::size_t feature_dim) {
  if (frames.size() != kOpeningFrames) {
    fail(ErrorCode::ShapeError, "opening scene needs exactly 18 frames, got " + std::to_string(frames.size()));
  }
  for (const auto& f : frames) nn::require_dim(f.size(), feature_dim, "opening frame feature");
}

inline OpeningScore score_opening(const FrameFeatures& frames, const OpeningModel& model) {
  require_opening_frames(frames, model.dims().feature_dim);
  const OpeningForward f = model.forward(frames);
  return {nn::sigmoid(f.logit), f.attention.weights};
}

struct OpeningTrainResult {
  OpeningModel model;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
  data::SplitSizes sizes;
};

/// 80/10/10 split seeded by cfg.seed; every video must have 18 frames.
inline OpeningTrainResult train_opening_model(const std::vector<nn::Example<FrameFeatures>>& data,
                                              const OpeningDims& dims, const nn::TrainConfig& cfg,
                                              const data::SplitRatios& ratios = {}) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no opening-scene examples");
  for (const auto& e : data) require_opening_frames(e.input, dims.feature_dim);
  const auto split = data::split_dataset(data, ratios, cfg.seed);
  OpeningTrainResult r{OpeningModel(dims), {}, 0.0, {split.train.size(), split.validation.size(), split.test.size()}};
  r.history = nn::train_classifier<OpeningModel, FrameFeatures>(r.model, split.train, split.validation, cfg);
  r.test_accuracy = nn::accuracy<OpeningModel, FrameFeatures>(r.model, split.test);
  return r;
}

/// Videos of 18 noise frames; popular videos replace one random frame with a
/// fixed signal vector plus noise.
struct PlantedVideo {
  FrameFeatures frames;
  int label = 0;
  std::size_t signal_frame = 0;  // meaningful for label 1
};

struct PlantedOpeningOptions {
  std::size_t feature_dim = 16;
  double signal_norm = 3.0;
  double signal_noise = 0.3;
};

class PlantedOpeningGenerator {
 public:
  explicit PlantedOpeningGenerator(std::uint64_t seed, const PlantedOpeningOptions& opt = {})
      : opt_(opt), rng_(seed) {
    std::normal_distribution<double> g(0.0, 1.0);
    signal_.resize(opt.feature_dim);
    double n2 = 0.0;
    for (double& v : signal_) {
      v = g(rng_);
      n2 += v * v;
    }
    for (double& v : signal_) v *= opt.signal_norm / std::sqrt(n2);
  }

  const nn::Vec& signal() const { return signal_; }

  PlantedVideo next(int label) {
    std::normal_distribution<double> g(0.0, 1.0);
    PlantedVideo v;
    v.label = label;
    v.frames.assign(kOpeningFrames, nn::Vec(opt_.feature_dim));
    for (auto& f : v.frames) {
      for (double& x : f) x = g(rng_);
    }
    if (label == 1) {
      v.signal_frame = std::uniform_int_distribution<std::size_t>(0, kOpeningFrames - 1)(rng_);
      for (std::size_t j = 0; j < opt_.feature_dim; ++j) {
        v.frames[v.signal_frame][j] = signal_[j] + opt_.signal_noise * g(rng_);
      }
    }
    return v;
  }

  std::vector<PlantedVideo> batch(std::size_t n) {
    std::vector<PlantedVideo> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) out.push_back(next(static_cast<int>(i % 2 == 0)));
    return out;
  }

 private:
  PlantedOpeningOptions opt_;
  std::mt19937_64 rng_;
  nn::Vec signal_;
};

}  // namespace vidpop::visual
