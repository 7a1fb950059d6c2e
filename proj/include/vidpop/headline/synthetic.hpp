#pragma once

#include <cmath>
#include <cstdio>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vidpop/datapipe/embeddings.hpp"
#include "vidpop/datapipe/normalize.hpp"

namespace vidpop::headline {

/// Titles of filler words with exactly one planted keyword: the positive
/// keyword marks popular titles, the negative keyword unpopular ones.
struct PlantedHeadlines {
  data::LabeledCorpus corpus;
  data::EmbeddingTable embeddings;
  std::string positive_keyword = "amazing";
  std::string negative_keyword = "boring";
};

struct PlantedHeadlineOptions {
  std::size_t titles = 1000;
  std::size_t embedding_dim = 16;
  std::size_t filler_words = 60;
  std::size_t min_filler = 3;
  std::size_t max_filler = 8;
  double embedding_scale = 1.0;  // per-component standard deviation
  std::vector<std::string> filler_names;  // overrides the "w<i>" filler words when non-empty
};

inline data::VideoRecord synthetic_record(std::size_t i, std::string title) {
  data::VideoRecord r;
  char id[32];
  std::snprintf(id, sizeof id, "syn%05zu", i);
  r.video_id = id;
  r.title = std::move(title);
  r.channel_id = "synthetic";
  r.category = {"synthetic", "planted"};
  return r;
}

inline PlantedHeadlines make_planted_headlines(std::uint64_t seed, const PlantedHeadlineOptions& opt = {}) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, opt.embedding_scale);
  PlantedHeadlines out;
  out.embeddings = data::EmbeddingTable(opt.embedding_dim);
  auto random_vec = [&] {
    std::vector<double> v(opt.embedding_dim);
    for (double& x : v) x = gauss(rng);
    return v;
  };
  std::vector<std::string> filler;
  const std::size_t n_filler = opt.filler_names.empty() ? opt.filler_words : opt.filler_names.size();
  for (std::size_t i = 0; i < n_filler; ++i) {
    filler.push_back(opt.filler_names.empty() ? "w" + std::to_string(i) : opt.filler_names[i]);
    out.embeddings.add(filler.back(), random_vec());
  }
  out.embeddings.add(out.positive_keyword, random_vec());
  out.embeddings.add(out.negative_keyword, random_vec());

  std::uniform_int_distribution<std::size_t> len(opt.min_filler, opt.max_filler);
  std::uniform_int_distribution<std::size_t> word(0, filler.size() - 1);
  for (std::size_t i = 0; i < opt.titles; ++i) {
    const bool popular = i % 2 == 0;
    std::vector<std::string> words(len(rng));
    for (auto& w : words) w = filler[word(rng)];
    const std::size_t pos = std::uniform_int_distribution<std::size_t>(0, words.size())(rng);
    words.insert(words.begin() + static_cast<std::ptrdiff_t>(pos),
                 popular ? out.positive_keyword : out.negative_keyword);
    std::string title;
    for (const auto& w : words) title += (title.empty() ? "" : " ") + w;
    data::LabeledExample ex{synthetic_record(i, title), popular ? 1.0 : 0.0,
                            popular ? data::Popularity::popular : data::Popularity::unpopular};
    out.corpus.examples.push_back(std::move(ex));
  }
  out.corpus.median_used = 0.5;
  return out;
}

}  // namespace vidpop::headline
