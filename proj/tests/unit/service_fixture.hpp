#pragma once

// Writes a complete set of service models into a scratch directory: the
// committed chat headline model and archive, plus seeded tiny-CNN thumbnail
// and opening models that accept both feature vectors and raw frames.

#include <random>
#include <string>
#include <vector>

#include "chat_fixture.hpp"
#include "temp_dir.hpp"
#include "vidpop/service.hpp"
#include "vidpop/visual.hpp"

namespace vidpop::testing {

struct ServiceFixture {
  TempDir dir;
  service::ServiceConfig config;

  ServiceFixture() {
    const auto chat = chat_fixture_dir();
    config.port = 0;
    config.threads = 4;
    config.headline_model = chat / "headline.nnk";
    config.embeddings = chat / "embeddings.txt";
    config.corpus = chat / "archive.jsonl";

    nn::Rng rng(3);
    visual::ThumbnailModel thumb{nn::LogisticHead(visual::kTinyCnnFeatures, "thumbnail.head"), visual::TinyCnn(3)};
    thumb.backbone->init(rng);
    thumb.head.init(rng);
    config.thumbnail_model = dir / "thumbnail.nnk";
    visual::save_thumbnail_model(*config.thumbnail_model, thumb);

    visual::OpeningBundle opening{visual::OpeningModel({visual::kTinyCnnFeatures, 8, 8}), visual::TinyCnn(3)};
    opening.backbone->init(rng);
    opening.model.init(rng);
    config.opening_model = dir / "opening.nnk";
    visual::save_opening_model(*config.opening_model, opening);
  }
};

/// Deterministic RGB test frame.
inline visual::Image test_frame(std::uint64_t seed, std::size_t size = 16) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  visual::Image img(size, size, 3);
  for (double& v : img.data) v = std::round(u(rng) * 255.0) / 255.0;
  return img;
}

inline std::vector<std::vector<double>> test_features(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<std::vector<double>> out(rows, std::vector<double>(dim));
  for (auto& r : out) {
    for (double& v : r) v = static_cast<float>(g(rng));  // exactly representable in FVEC
  }
  return out;
}

}  // namespace vidpop::testing
