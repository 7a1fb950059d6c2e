#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "vidpop/datapipe/embeddings.hpp"
#include "vidpop/datapipe/normalize.hpp"
#include "vidpop/datapipe/split.hpp"
#include "vidpop/headline/tokenize.hpp"
#include "vidpop/nnkern.hpp"

namespace vidpop::headline {

using nn::Vec;
using Sequence = std::vector<Vec>;

struct HeadlineDims {
  std::size_t embedding_dim = 50;
  std::size_t hidden_dim = 16;
  std::size_t attention_dim = 16;
  std::size_t max_tokens = kMaxTokens;
};

struct HeadlineForward {
  nn::BiLstmTrace encoder;
  nn::AttentionResult attention;
  double logit = 0.0;
};

/// embeddings -> bi-LSTM -> additive attention -> dense -> sigmoid.
class HeadlineModel {
 public:
  HeadlineModel() = default;
  explicit HeadlineModel(const HeadlineDims& d)
      : dims_(d),
        encoder_(d.embedding_dim, d.hidden_dim, "headline.bilstm"),
        attention_(2 * d.hidden_dim, d.attention_dim, "headline.attention"),
        head_(2 * d.hidden_dim, 1, "headline.head") {}

  const HeadlineDims& dims() const { return dims_; }

  void init(nn::Rng& rng) {
    encoder_.init(rng);
    attention_.init(rng);
    head_.init(rng);
  }

  nn::ParamRefs params() {
    nn::ParamRefs out = encoder_.params();
    nn::append(out, attention_.params());
    nn::append(out, head_.params());
    return out;
  }

  HeadlineForward forward(const Sequence& x) const {
    for (const auto& v : x) nn::require_dim(v.size(), dims_.embedding_dim, "headline token embedding");
    HeadlineForward f;
    f.encoder = nn::bilstm_trace(x, encoder_);
    f.attention = nn::attention_pool(f.encoder.outputs, attention_);
    f.logit = head_.forward(f.attention.context)[0];
    return f;
  }

  double probability(const Sequence& x) const { return nn::sigmoid(forward(x).logit); }

  double loss(const Sequence& x, int label, nn::KinkProbe* = nullptr) const {
    return nn::bce_with_logit(forward(x).logit, label);
  }

  double accumulate(const Sequence& x, int label) {
    const HeadlineForward f = forward(x);
    const double dz = nn::sigmoid(f.logit) - label;
    const Vec dcontext = head_.backward(f.attention.context, std::span<const double>(&dz, 1));
    const std::vector<Vec> dh = nn::attention_backward(f.encoder.outputs, f.attention, dcontext, attention_);
    nn::bilstm_backward(f.encoder, dh, encoder_);
    return nn::bce_with_logit(f.logit, label);
  }

  int predict(const Sequence& x) const { return forward(x).logit > 0.0 ? 1 : 0; }

 private:
  HeadlineDims dims_;
  nn::BiLstm encoder_;
  nn::AdditiveAttention attention_;
  nn::Dense head_;
};

static_assert(nn::Classifier<HeadlineModel, Sequence>);

struct TokenWeight {
  std::string token;
  double weight = 0.0;
};

struct HeadlineScore {
  double probability_popular = 0.0;
  std::vector<TokenWeight> contributions;  // one per token, attention weights
  std::vector<std::string> oov_tokens;
};

struct EmbeddedTitle {
  std::vector<std::string> tokens;
  Sequence vectors;
  std::vector<std::string> oov_tokens;
};

inline EmbeddedTitle embed_title(std::string_view title, const data::EmbeddingTable& emb,
                                 std::size_t max_tokens = kMaxTokens) {
  EmbeddedTitle out;
  out.tokens = tokenize(title, max_tokens);
  for (const auto& t : out.tokens) {
    auto lk = emb.lookup(t);
    if (lk.oov) out.oov_tokens.push_back(t);
    out.vectors.push_back(std::move(lk.vector));
  }
  return out;
}

inline HeadlineScore score_headline(std::string_view title, const HeadlineModel& model,
                                    const data::EmbeddingTable& emb) {
  if (emb.dim() != model.dims().embedding_dim) {
    fail(ErrorCode::ShapeError, "embedding dim " + std::to_string(emb.dim()) + " does not match model input dim " +
                                    std::to_string(model.dims().embedding_dim));
  }
  const EmbeddedTitle e = embed_title(title, emb, model.dims().max_tokens);
  const HeadlineForward f = model.forward(e.vectors);
  HeadlineScore s;
  s.probability_popular = nn::sigmoid(f.logit);
  for (std::size_t t = 0; t < e.tokens.size(); ++t) s.contributions.push_back({e.tokens[t], f.attention.weights[t]});
  s.oov_tokens = e.oov_tokens;
  return s;
}

struct HeadlineTrainConfig {
  HeadlineDims dims;
  nn::TrainConfig train{0.1, 30, 16, 0, 0.0};
  data::SplitRatios split;
};

struct HeadlineTrainResult {
  HeadlineModel model;
  nn::TrainHistory history;
  double test_accuracy = 0.0;
  data::SplitSizes sizes;
};

/// Splits 80/10/10 (seeded by cfg.train.seed), trains with SGD and keeps the
/// best-validation parameters; reports held-out test accuracy.
inline HeadlineTrainResult train_headline_model(const data::LabeledCorpus& corpus, const data::EmbeddingTable& emb,
                                                const HeadlineTrainConfig& cfg) {
  if (corpus.examples.empty()) fail(ErrorCode::EmptyDataset, "no labeled titles");
  if (emb.dim() != cfg.dims.embedding_dim) {
    fail(ErrorCode::ShapeError, "embedding dim " + std::to_string(emb.dim()) + " does not match configured " +
                                    std::to_string(cfg.dims.embedding_dim));
  }
  std::vector<nn::Example<Sequence>> all;
  all.reserve(corpus.examples.size());
  for (const auto& ex : corpus.examples) {
    all.push_back({embed_title(ex.record.title, emb, cfg.dims.max_tokens).vectors, static_cast<int>(ex.label)});
  }
  const auto split = data::split_dataset(all, cfg.split, cfg.train.seed);
  HeadlineTrainResult r{HeadlineModel(cfg.dims), {}, 0.0, {split.train.size(), split.validation.size(), split.test.size()}};
  r.history = nn::train_classifier<HeadlineModel, Sequence>(r.model, split.train, split.validation, cfg.train);
  r.test_accuracy = nn::accuracy<HeadlineModel, Sequence>(r.model, split.test);
  return r;
}

inline void save_headline_model(const std::filesystem::path& path, HeadlineModel& model,
                                const data::EmbeddingTable& emb) {
  nn::save_checkpoint(path, model.params());
  const auto& d = model.dims();
  const nlohmann::json side{{"model", "headline"},
                            {"embedding_dim", d.embedding_dim},
                            {"hidden_dim", d.hidden_dim},
                            {"attention_dim", d.attention_dim},
                            {"max_tokens", d.max_tokens},
                            {"vocab_hash", emb.vocab_hash()}};
  nn::detail::write_file(nn::sidecar_path(path), side.dump(2) + "\n");
}

struct LoadedHeadline {
  HeadlineModel model;
  std::string vocab_hash;
};

inline LoadedHeadline load_headline_model(const std::filesystem::path& path) {
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(nn::detail::read_file(nn::sidecar_path(path)));
    if (side.value("model", std::string("headline")) != "headline") {
      fail(ErrorCode::FormatError, path.string() + " is not a headline model");
    }
    HeadlineDims d;
    d.embedding_dim = side.at("embedding_dim").get<std::size_t>();
    d.hidden_dim = side.at("hidden_dim").get<std::size_t>();
    d.attention_dim = side.at("attention_dim").get<std::size_t>();
    d.max_tokens = side.value("max_tokens", kMaxTokens);
    LoadedHeadline out{HeadlineModel(d), side.value("vocab_hash", std::string())};
    nn::load_checkpoint(path, out.model.params());
    return out;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::FormatError, nn::sidecar_path(path).string() + ": " + e.what());
  }
}

}  // namespace vidpop::headline
