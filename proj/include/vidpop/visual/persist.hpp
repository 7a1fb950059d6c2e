#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "vidpop/nnkern.hpp"
#include "vidpop/visual/opening.hpp"
#include "vidpop/visual/thumbnail.hpp"
#include "vidpop/visual/tinycnn.hpp"

namespace vidpop::visual {

namespace detail {

inline void write_sidecar(const std::filesystem::path& path, const nlohmann::json& j) {
  nn::detail::write_file(nn::sidecar_path(path), j.dump(2) + "\n");
}

inline nlohmann::json read_sidecar(const std::filesystem::path& path, const std::string& model) {
  const auto side_path = nn::sidecar_path(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(nn::detail::read_file(side_path));
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, side_path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("model", std::string()) != model) {
    fail(ErrorCode::FormatError, path.string() + " is not a " + model + " model");
  }
  return j;
}

template <class T>
T field(const nlohmann::json& j, const char* key, const std::filesystem::path& path) {
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::FormatError, nn::sidecar_path(path).string() + ": missing or bad field '" + key + "'");
  }
}

}  // namespace detail

inline void save_cnn_classifier(const std::filesystem::path& path, CnnClassifier& m) {
  nn::save_checkpoint(path, m.params());
  detail::write_sidecar(path, {{"model", "tinycnn"}, {"in_channels", m.backbone().in_channels()}});
}

inline CnnClassifier load_cnn_classifier(const std::filesystem::path& path) {
  const auto j = detail::read_sidecar(path, "tinycnn");
  CnnClassifier m(detail::field<std::size_t>(j, "in_channels", path));
  nn::load_checkpoint(path, m.params());
  return m;
}

/// Re-labels a trained image classifier as a thumbnail model with the
/// built-in backbone.
inline ThumbnailModel thumbnail_from_cnn(const CnnClassifier& cnn) {
  ThumbnailModel t{nn::LogisticHead(kTinyCnnFeatures, "thumbnail.head"), cnn.backbone()};
  t.head.layer().weight.value = cnn.head().layer().weight.value;
  t.head.layer().bias.value = cnn.head().layer().bias.value;
  return t;
}

inline void save_thumbnail_model(const std::filesystem::path& path, ThumbnailModel& m) {
  nn::save_checkpoint(path, m.params());
  nlohmann::json side{{"model", "thumbnail"}, {"feature_dim", m.feature_dim()}, {"backbone", m.backbone_name()}};
  if (m.backbone) side["in_channels"] = m.backbone->in_channels();
  detail::write_sidecar(path, side);
}

inline ThumbnailModel load_thumbnail_model(const std::filesystem::path& path) {
  const auto j = detail::read_sidecar(path, "thumbnail");
  ThumbnailModel m{nn::LogisticHead(detail::field<std::size_t>(j, "feature_dim", path), "thumbnail.head"), {}};
  const auto backbone = j.value("backbone", std::string("external"));
  if (backbone == "tinycnn") {
    m.backbone = TinyCnn(detail::field<std::size_t>(j, "in_channels", path));
  } else if (backbone != "external") {
    fail(ErrorCode::FormatError, "unknown backbone '" + backbone + "'");
  }
  nn::load_checkpoint(path, m.params());
  return m;
}

/// Opening-scene model, optionally carrying the image backbone whose
/// features it was trained on (needed for saliency maps).
struct OpeningBundle {
  OpeningModel model;
  std::optional<TinyCnn> backbone;

  nn::ParamRefs params() {
    nn::ParamRefs out;
    if (backbone) out = backbone->params();
    nn::append(out, model.params());
    return out;
  }
};

inline void save_opening_model(const std::filesystem::path& path, OpeningBundle& b) {
  nn::save_checkpoint(path, b.params());
  const auto& d = b.model.dims();
  nlohmann::json side{{"model", "opening"},
                      {"feature_dim", d.feature_dim},
                      {"projection_dim", d.projection_dim},
                      {"attention_dim", d.attention_dim},
                      {"frames", kOpeningFrames},
                      {"backbone", b.backbone ? "tinycnn" : "external"}};
  if (b.backbone) side["in_channels"] = b.backbone->in_channels();
  detail::write_sidecar(path, side);
}

inline OpeningBundle load_opening_model(const std::filesystem::path& path) {
  const auto j = detail::read_sidecar(path, "opening");
  OpeningDims d{detail::field<std::size_t>(j, "feature_dim", path),
                detail::field<std::size_t>(j, "projection_dim", path),
                detail::field<std::size_t>(j, "attention_dim", path)};
  OpeningBundle b{OpeningModel(d), {}};
  if (j.value("backbone", std::string("external")) == "tinycnn") {
    b.backbone = TinyCnn(detail::field<std::size_t>(j, "in_channels", path));
  }
  nn::load_checkpoint(path, b.params());
  return b;
}

struct VideoScore {
  OpeningScore score;
  std::vector<SaliencyMap> saliency;  // one per frame, empty without a backbone
};

/// Scores 18 opening frames end to end and explains each with GradCAM on the
/// popularity logit.
inline VideoScore score_video_frames(const std::vector<Image>& frames, const OpeningBundle& b) {
  if (!b.backbone) fail(ErrorCode::ConfigError, "opening model has no image backbone; send feature vectors");
  if (frames.size() != kOpeningFrames) {
    fail(ErrorCode::ShapeError, "opening scene needs exactly 18 frames, got " + std::to_string(frames.size()));
  }
  std::vector<TinyCnnFeatures> ext;
  FrameFeatures feats;
  for (const auto& f : frames) {
    ext.push_back(tinycnn_extract(f, *b.backbone));
    feats.push_back(ext.back().features);
  }
  VideoScore out;
  out.score = score_opening(feats, b.model);
  const auto dfeat = b.model.input_gradients(feats);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const Tensor g = nn::global_average_pool_backward(ext[t].activations.shape(), dfeat[t]);
    out.saliency.push_back(gradcam(ext[t].activations, g, frames[t].height, frames[t].width, t));
  }
  return out;
}

}  // namespace vidpop::visual
