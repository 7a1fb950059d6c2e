#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "vidpop/datapipe/embeddings.hpp"
#include "vidpop/datapipe/record.hpp"
#include "vidpop/datapipe/split.hpp"
#include "vidpop/headline/tokenize.hpp"
#include "vidpop/nnkern.hpp"

namespace vidpop::archive {

inline constexpr std::size_t kTopicEmbeddingDim = 400;

/// dense -> ReLU -> dense -> softmax over the flattened (tier1, tier2) classes.
class TopicClassifier {
 public:
  TopicClassifier() = default;
  TopicClassifier(std::vector<data::Category> classes, std::size_t hidden_dim,
                  std::size_t input_dim = kTopicEmbeddingDim)
      : classes_(std::move(classes)), mlp_(input_dim, hidden_dim, classes_.size(), "topic") {
    if (classes_.size() < 2) fail(ErrorCode::ConfigError, "topic classifier needs at least two classes");
  }

  const std::vector<data::Category>& classes() const { return classes_; }
  std::size_t input_dim() const { return mlp_.input_dim(); }
  std::size_t hidden_dim() const { return mlp_.hidden_dim(); }
  nn::SoftmaxMlp& mlp() { return mlp_; }
  const nn::SoftmaxMlp& mlp() const { return mlp_; }

  std::size_t class_index(const data::Category& c) const {
    for (std::size_t i = 0; i < classes_.size(); ++i) {
      if (classes_[i] == c) return i;
    }
    fail(ErrorCode::ConfigError, "unknown category " + c.tier1 + "/" + c.tier2);
  }

 private:
  std::vector<data::Category> classes_;
  nn::SoftmaxMlp mlp_;
};

struct TopicPrediction {
  std::vector<double> probabilities;  // one per class, sums to 1
  std::size_t best = 0;
  data::Category category;
};

inline TopicPrediction classify_topic(const nn::Vec& embedding, const TopicClassifier& clf) {
  nn::require_dim(embedding.size(), clf.input_dim(), "topic embedding");
  TopicPrediction p;
  p.probabilities = clf.mlp().probabilities(embedding);
  p.best = static_cast<std::size_t>(std::max_element(p.probabilities.begin(), p.probabilities.end()) -
                                    p.probabilities.begin());
  p.category = clf.classes()[p.best];
  return p;
}

/// Mean of the known token vectors of the text; zero vector when none are known.
inline nn::Vec document_vector(std::string_view text, const data::EmbeddingTable& emb) {
  std::vector<std::string> tokens;
  try {
    tokens = headline::tokenize(text, std::numeric_limits<std::size_t>::max());
  } catch (const Error&) {
    return nn::Vec(emb.dim(), 0.0);
  }
  return emb.average(tokens);
}

/// Sorted distinct categories of a corpus.
inline std::vector<data::Category> corpus_categories(const data::Corpus& corpus) {
  std::vector<data::Category> out;
  for (const auto& r : corpus.records()) out.push_back(r.category);
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    return std::tie(a.tier1, a.tier2) < std::tie(b.tier1, b.tier2);
  });
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

struct TopicTrainResult {
  TopicClassifier classifier;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
};

inline TopicTrainResult train_topic_classifier(const std::vector<nn::Example<nn::Vec>>& data,
                                               std::vector<data::Category> classes, std::size_t hidden_dim,
                                               const nn::TrainConfig& cfg, std::size_t input_dim = kTopicEmbeddingDim,
                                               const data::SplitRatios& ratios = {}) {
  if (data.empty()) fail(ErrorCode::EmptyDataset, "no topic examples");
  TopicTrainResult r{TopicClassifier(std::move(classes), hidden_dim, input_dim), {}, 0.0};
  for (const auto& e : data) {
    nn::require_dim(e.input.size(), input_dim, "topic embedding");
    if (e.label < 0 || static_cast<std::size_t>(e.label) >= r.classifier.classes().size()) {
      fail(ErrorCode::ConfigError, "topic label out of range");
    }
  }
  const auto split = data::split_dataset(data, ratios, cfg.seed);
  r.history = nn::train_classifier<nn::SoftmaxMlp, nn::Vec>(r.classifier.mlp(), split.train, split.validation, cfg);
  r.test_accuracy = nn::accuracy<nn::SoftmaxMlp, nn::Vec>(r.classifier.mlp(), split.test);
  return r;
}

inline void save_topic_classifier(const std::filesystem::path& path, TopicClassifier& clf) {
  nn::save_checkpoint(path, clf.mlp().params());
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : clf.classes()) classes.push_back({{"tier1", c.tier1}, {"tier2", c.tier2}});
  const nlohmann::json side{{"model", "topic"},
                            {"input_dim", clf.input_dim()},
                            {"hidden_dim", clf.hidden_dim()},
                            {"classes", classes}};
  nn::detail::write_file(nn::sidecar_path(path), side.dump(2) + "\n");
}

inline TopicClassifier load_topic_classifier(const std::filesystem::path& path) {
  try {
    const auto j = nlohmann::json::parse(nn::detail::read_file(nn::sidecar_path(path)));
    if (j.value("model", std::string()) != "topic") fail(ErrorCode::FormatError, path.string() + " is not a topic model");
    std::vector<data::Category> classes;
    for (const auto& c : j.at("classes")) classes.push_back({c.at("tier1"), c.at("tier2")});
    TopicClassifier clf(std::move(classes), j.at("hidden_dim").get<std::size_t>(), j.at("input_dim").get<std::size_t>());
    nn::load_checkpoint(path, clf.mlp().params());
    return clf;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, nn::sidecar_path(path).string() + ": " + e.what());
  }
}

/// Well-separated class centres in `dim` dimensions plus isotropic noise.
inline std::vector<nn::Example<nn::Vec>> make_topic_clusters(std::size_t n, std::size_t classes, std::size_t dim,
                                                             double noise, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<nn::Vec> centres(classes, nn::Vec(dim));
  for (auto& c : centres) {
    for (double& v : c) v = g(rng) / std::sqrt(static_cast<double>(dim)) * 3.0;
  }
  std::vector<nn::Example<nn::Vec>> out;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t k = i % classes;
    nn::Vec x = centres[k];
    for (double& v : x) v += noise * g(rng) / std::sqrt(static_cast<double>(dim));
    out.push_back({std::move(x), static_cast<int>(k)});
  }
  return out;
}

}  // namespace vidpop::archive
