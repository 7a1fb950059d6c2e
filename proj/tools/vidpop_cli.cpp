// vidpop command-line tool: training, scoring, archive indexing, A/B analysis
// and the HTTP service.

#include <csignal>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "vidpop/archive.hpp"
#include "vidpop/chat.hpp"
#include "vidpop/datapipe.hpp"
#include "vidpop/headline.hpp"
#include "vidpop/service.hpp"
#include "vidpop/visual.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vidpop;

namespace {

struct Globals {
  std::string corpus;
  std::string embeddings;
  std::string channels;
  std::uint64_t seed = 0;
};

struct TrainFlags {
  std::string out;
  int epochs = 30;
  double lr = 0.1;
  int batch = 16;
  double l2 = 0.0;

  nn::TrainConfig config(std::uint64_t seed) const { return {lr, epochs, batch, seed, l2}; }
};

void add_train_flags(CLI::App* cmd, TrainFlags& f) {
  cmd->add_option("--out", f.out, "Checkpoint path (sidecar written to <out>.json)")->required();
  cmd->add_option("--epochs", f.epochs, "Training epochs")->capture_default_str();
  cmd->add_option("--lr", f.lr, "SGD learning rate")->capture_default_str();
  cmd->add_option("--batch", f.batch, "Minibatch size")->capture_default_str();
  cmd->add_option("--l2", f.l2, "L2 weight decay")->capture_default_str();
}

json history_json(const nn::TrainHistory& h) {
  json epochs = json::array();
  for (const auto& e : h.epochs) {
    json j{{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}};
    if (e.val_accuracy) j["val_accuracy"] = *e.val_accuracy;
    if (e.val_loss) j["val_loss"] = *e.val_loss;
    epochs.push_back(j);
  }
  return {{"best_epoch", h.best_epoch}, {"epochs", epochs}};
}

json sizes_json(const data::SplitSizes& s) { return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}}; }

void print(const json& j) { std::cout << j.dump(2) << '\n'; }

const std::string& require(const std::string& value, const char* flag) {
  if (value.empty()) fail(ErrorCode::ConfigError, std::string(flag) + " is required");
  return value;
}

data::Corpus load_corpus(const Globals& g) { return data::load_corpus(require(g.corpus, "--corpus")); }

data::LabeledCorpus label_corpus(const Globals& g, bool debias) {
  const data::Corpus corpus = load_corpus(g);
  const data::ChannelTable channels = g.channels.empty() ? data::ChannelTable{} : data::load_channel_stats(g.channels);
  return data::build_labeled_corpus(corpus, channels, {debias});
}

/// features_path of a record, resolved against the corpus file's directory.
fs::path features_of(const data::VideoRecord& r, const Globals& g) {
  if (!r.features_path) fail(ErrorCode::ConfigError, "video " + r.video_id + " has no features_path");
  const fs::path p(*r.features_path);
  return p.is_absolute() ? p : fs::path(g.corpus).parent_path() / p;
}

bool is_image(const fs::path& p) {
  const auto ext = p.extension().string();
  return ext == ".ppm" || ext == ".pgm";
}

std::vector<visual::Image> read_frames(const fs::path& dir) {
  std::vector<visual::Image> out;
  for (const auto& p : visual::list_frames(dir)) out.push_back(visual::read_image(p));
  return out;
}

// ---------------------------------------------------------------- commands

int train_headline(const Globals& g, const TrainFlags& f, const headline::HeadlineDims& dims, bool debias) {
  const auto labeled = label_corpus(g, debias);
  const auto emb = data::load_embeddings(require(g.embeddings, "--embeddings"), dims.embedding_dim);
  headline::HeadlineTrainConfig cfg;
  cfg.dims = dims;
  cfg.train = f.config(g.seed);
  auto r = headline::train_headline_model(labeled, emb, cfg);
  headline::save_headline_model(f.out, r.model, emb);
  print({{"model", f.out},
         {"test_accuracy", r.test_accuracy},
         {"median", labeled.median_used},
         {"sizes", sizes_json(r.sizes)},
         {"history", history_json(r.history)}});
  return 0;
}

int train_thumbnail(const Globals& g, const TrainFlags& f, bool debias) {
  const auto labeled = label_corpus(g, debias);
  std::vector<nn::Example<nn::Vec>> feats;
  std::vector<nn::Example<visual::Image>> images;
  for (const auto& ex : labeled.examples) {
    const int label = ex.label == data::Popularity::popular ? 1 : 0;
    const fs::path p = features_of(ex.record, g);
    if (is_image(p)) {
      images.push_back({visual::read_image(p), label});
    } else {
      const auto m = data::read_feature_file(p);
      if (m.count == 0) fail(ErrorCode::EmptyVideo, p.string() + " holds no feature rows");
      feats.push_back({m.row_as_double(0), label});
    }
  }
  if (!feats.empty() && !images.empty()) {
    fail(ErrorCode::ConfigError, "corpus mixes FVEC features and images; use one kind per model");
  }
  json out{{"model", f.out}, {"median", labeled.median_used}};
  if (!images.empty()) {
    auto r = visual::train_cnn_classifier(images, images.front().input.channels, f.config(g.seed));
    auto model = visual::thumbnail_from_cnn(r.model);
    visual::save_thumbnail_model(f.out, model);
    out.update({{"backbone", "tinycnn"}, {"test_accuracy", r.test_accuracy}, {"sizes", sizes_json(r.sizes)},
                {"history", history_json(r.history)}});
  } else {
    const std::size_t dim = feats.front().input.size();
    auto r = visual::train_thumbnail_head(feats, dim, f.config(g.seed));
    visual::ThumbnailModel model{r.head, std::nullopt};
    visual::save_thumbnail_model(f.out, model);
    out.update({{"backbone", "external"}, {"test_accuracy", r.test_accuracy}, {"sizes", sizes_json(r.sizes)},
                {"history", history_json(r.history)}});
  }
  print(out);
  return 0;
}

int train_opening(const Globals& g, const TrainFlags& f, std::size_t projection, std::size_t attention,
                  const std::string& backbone_path, bool debias) {
  const auto labeled = label_corpus(g, debias);
  std::optional<visual::TinyCnn> backbone;
  std::vector<nn::Example<visual::FrameFeatures>> data;
  for (const auto& ex : labeled.examples) {
    const int label = ex.label == data::Popularity::popular ? 1 : 0;
    const fs::path p = features_of(ex.record, g);
    if (fs::is_directory(p)) {
      const auto frames = read_frames(p);
      if (frames.empty()) fail(ErrorCode::EmptyVideo, p.string() + " holds no frames");
      if (!backbone) {
        if (!backbone_path.empty()) {
          const auto thumb = visual::load_thumbnail_model(backbone_path);
          if (!thumb.backbone) fail(ErrorCode::ConfigError, backbone_path + " has no tinycnn backbone");
          backbone = *thumb.backbone;
        } else {
          backbone = visual::TinyCnn(frames.front().channels);
          nn::Rng rng(g.seed);
          backbone->init(rng);
        }
      }
      data.push_back({visual::tinycnn_features(frames, *backbone), label});
    } else {
      data.push_back({data::read_feature_file(p).rows_as_double(), label});
    }
  }
  const std::size_t dim = data.front().input.empty() ? 0 : data.front().input.front().size();
  auto r = visual::train_opening_model(data, {dim, projection, attention}, f.config(g.seed));
  visual::OpeningBundle bundle{r.model, backbone};
  visual::save_opening_model(f.out, bundle);
  print({{"model", f.out},
         {"backbone", backbone ? "tinycnn" : "external"},
         {"test_accuracy", r.test_accuracy},
         {"median", labeled.median_used},
         {"sizes", sizes_json(r.sizes)},
         {"history", history_json(r.history)}});
  return 0;
}

struct ScoreFlags {
  std::string headline, title, thumbnail, opening, features, frames, saliency_out;
};

int score(const Globals& g, const ScoreFlags& s) {
  json out = json::object();
  if (!s.headline.empty()) {
    const auto loaded = headline::load_headline_model(s.headline);
    const auto emb = data::load_embeddings(require(g.embeddings, "--embeddings"), loaded.model.dims().embedding_dim);
    const auto r = headline::score_headline(require(s.title, "--title"), loaded.model, emb);
    json contrib = json::array();
    for (const auto& c : r.contributions) contrib.push_back({{"token", c.token}, {"weight", c.weight}});
    out["headline"] = {{"probability_popular", r.probability_popular},
                       {"contributions", contrib},
                       {"oov_tokens", r.oov_tokens}};
  }
  if (!s.thumbnail.empty()) {
    const auto model = visual::load_thumbnail_model(s.thumbnail);
    const auto r = s.frames.empty()
                       ? visual::recommend_from_features(data::read_feature_file(require(s.features, "--features"))
                                                             .rows_as_double(),
                                                         model.head)
                       : model.recommend_images(read_frames(s.frames));
    out["thumbnail"] = {{"scores", r.scores}, {"best_frame", r.best_frame}};
  }
  if (!s.opening.empty()) {
    const auto bundle = visual::load_opening_model(s.opening);
    if (s.frames.empty()) {
      const auto r = visual::score_opening(data::read_feature_file(require(s.features, "--features")).rows_as_double(),
                                           bundle.model);
      out["opening"] = {{"probability_popular", r.probability_popular}, {"frame_attention", r.frame_attention}};
    } else {
      const auto r = visual::score_video_frames(read_frames(s.frames), bundle);
      out["opening"] = {{"probability_popular", r.score.probability_popular},
                        {"frame_attention", r.score.frame_attention}};
      if (!s.saliency_out.empty()) {
        fs::create_directories(s.saliency_out);
        json files = json::array();
        for (const auto& m : r.saliency) {
          const fs::path p = fs::path(s.saliency_out) / visual::frame_filename(m.frame_index, "pgm");
          visual::write_saliency(p, m);
          files.push_back(p.string());
        }
        out["opening"]["saliency"] = files;
      }
    }
  }
  if (out.empty()) fail(ErrorCode::ConfigError, "give --headline, --thumbnail or --opening");
  print(out);
  return 0;
}

struct IndexFlags {
  std::string out, tag, metric = "views", ask, headline;
};

int index(const Globals& g, const IndexFlags& f) {
  const data::Corpus corpus = load_corpus(g);
  const auto idx = archive::build_tag_index(corpus);
  json out{{"videos", corpus.size()}, {"tags", idx.size()}};
  if (!f.out.empty()) {
    archive::save_tag_index(f.out, idx);
    out["index"] = f.out;
  }
  if (!f.tag.empty()) {
    const auto q = archive::query_by_tag(idx, corpus, f.tag);
    json ids = json::array();
    for (const auto& r : q.records) ids.push_back(r.video_id);
    out["query"] = {{"tag", archive::normalize_tag(f.tag)}, {"video_ids", ids}, {"suggestions", q.suggestions}};
    if (!q.records.empty()) {
      const auto s = archive::tag_stats(idx, corpus, f.tag, f.metric);
      out["stats"] = {{"metric", archive::metric_name(s.metric)}, {"count", s.count}, {"mean", s.mean},
                      {"median", s.median}, {"total", s.total}};
    }
  }
  if (!f.ask.empty()) {
    std::optional<headline::HeadlineModel> model;
    std::optional<data::EmbeddingTable> emb;
    if (!f.headline.empty()) {
      model = headline::load_headline_model(f.headline).model;
      emb = data::load_embeddings(require(g.embeddings, "--embeddings"), model->dims().embedding_dim);
    }
    const auto intent = chat::parse_utterance(f.ask, idx.vocabulary());
    out["chat"] = chat::intent_to_json(intent);
    out["chat"]["response"] =
        chat::respond(intent, {&corpus, &idx, model ? &*model : nullptr, emb ? &*emb : nullptr});
  }
  print(out);
  return 0;
}

std::vector<double> read_numbers(const std::string& path) {
  const std::string text = nn::detail::read_file(path);
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '[') {
    try {
      return json::parse(text).get<std::vector<double>>();
    } catch (const json::exception& e) {
      fail(ErrorCode::FormatError, path + ": " + e.what());
    }
  }
  std::vector<double> out;
  std::istringstream in(text);
  std::string tok;
  while (in >> tok) {
    double v = 0.0;
    if (!data::detail::parse_double(tok, v)) fail(ErrorCode::FormatError, path + ": not a number: '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

int ab(const Globals& g, const std::string& a, const std::string& b, std::size_t resamples) {
  const auto r = service::ab_lift(read_numbers(a), read_numbers(b), g.seed, resamples);
  print({{"mean_a", r.mean_a}, {"mean_b", r.mean_b}, {"lift_percent", r.lift_percent}, {"ci_low", r.ci_low},
         {"ci_high", r.ci_high}, {"n_a", r.n_a}, {"n_b", r.n_b}, {"resamples", r.resamples}, {"seed", g.seed}});
  return 0;
}

struct ServeFlags {
  std::string host = "127.0.0.1", headline, thumbnail, opening, score_log;
  int port = 8080;
  std::size_t threads = 8;
};

service::ServiceHandle* g_running = nullptr;

int serve(const Globals& g, const ServeFlags& f) {
  service::ServiceConfig cfg;
  cfg.host = f.host;
  cfg.port = f.port;
  cfg.threads = f.threads;
  const auto opt = [](const std::string& s) { return s.empty() ? std::nullopt : std::optional<fs::path>(s); };
  cfg.headline_model = opt(f.headline);
  cfg.embeddings = opt(g.embeddings);
  cfg.thumbnail_model = opt(f.thumbnail);
  cfg.opening_model = opt(f.opening);
  cfg.corpus = opt(g.corpus);
  cfg.score_log = opt(f.score_log);
  auto handle = service::serve(cfg);
  g_running = handle.get();
  std::signal(SIGINT, [](int) {
    if (g_running) g_running->stop();
  });
  std::signal(SIGTERM, [](int) {
    if (g_running) g_running->stop();
  });
  std::cerr << "vidpop serving on http://" << handle->host() << ":" << handle->port() << '\n';
  print(handle->service().health().body);
  handle->wait();
  g_running = nullptr;
  return 0;
}

/// Writes a small planted demo dataset: headline corpus with embeddings and
/// thumbnail features, plus an opening-scene corpus of 18-frame FVEC files.
int synth(const Globals& g, const std::string& out_dir, std::size_t videos) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "opening");
  headline::PlantedHeadlineOptions hopt;
  hopt.titles = videos;
  const auto planted = headline::make_planted_headlines(g.seed, hopt);
  const auto blobs = visual::make_feature_blobs(videos, 16, 4.0, g.seed + 1);
  const std::vector<std::string> tags{"news", "sport", "science", "food", "travel"};
  std::vector<data::VideoRecord> records;
  for (std::size_t i = 0; i < planted.corpus.examples.size(); ++i) {
    const bool popular = planted.corpus.examples[i].label == data::Popularity::popular;
    data::VideoRecord r = planted.corpus.examples[i].record;
    r.views = popular ? 5000 + i : 100 + i;
    r.shares = r.views / 10;
    r.comments = r.views / 50;
    r.channel_likes = 100;
    r.tags = {tags[i % tags.size()], tags[(i / tags.size()) % tags.size()]};
    // Blob labels alternate like the planted titles, so the two agree.
    const std::string fname = "features/" + r.video_id + ".fvec";
    data::write_feature_file(dir / fname, data::FeatureMatrix::from_rows({blobs[i].input}));
    r.features_path = fname;
    records.push_back(std::move(r));
  }
  data::save_corpus(dir / "corpus.jsonl", data::Corpus(records));
  data::save_embeddings(dir / "embeddings.txt", planted.embeddings);

  visual::PlantedOpeningGenerator gen(g.seed + 2);
  std::vector<data::VideoRecord> opening;
  for (std::size_t i = 0; i < videos; ++i) {
    const int label = i % 2 == 0 ? 1 : 0;
    const auto v = gen.next(label);
    data::VideoRecord r = headline::synthetic_record(i, "opening scene " + std::to_string(i));
    r.views = label ? 5000 + i : 100 + i;
    r.channel_likes = 100;
    const std::string fname = "opening/" + r.video_id + ".fvec";
    data::write_feature_file(dir / fname, data::FeatureMatrix::from_rows(v.frames));
    r.features_path = fname;
    opening.push_back(std::move(r));
  }
  data::save_corpus(dir / "opening.jsonl", data::Corpus(opening));
  print({{"corpus", (dir / "corpus.jsonl").string()},
         {"embeddings", (dir / "embeddings.txt").string()},
         {"embedding_dim", hopt.embedding_dim},
         {"opening_corpus", (dir / "opening.jsonl").string()},
         {"videos", videos}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vidpop: video popularity models, archive chat and deployment tools"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "TOML-style key=value file; subcommand keys go under [subcommand] sections");

  Globals g;
  app.add_option("--corpus", g.corpus, "Video corpus (JSON lines)");
  app.add_option("--embeddings", g.embeddings, "Word embeddings (token v1 ... vd per line)");
  app.add_option("--channels", g.channels, "Channel likes table (JSON lines) for records without channel_likes");
  app.add_option("--seed", g.seed, "Seed for splits, initialisation, shuffling and bootstrap")->capture_default_str();

  bool debias = false;
  TrainFlags tf;

  auto* th = app.add_subcommand("train-headline", "Train the bi-LSTM attention headline model");
  headline::HeadlineDims hd;
  add_train_flags(th, tf);
  th->add_option("--embedding-dim", hd.embedding_dim, "Embedding dimension")->capture_default_str();
  th->add_option("--hidden", hd.hidden_dim, "LSTM hidden size per direction")->capture_default_str();
  th->add_option("--attention", hd.attention_dim, "Attention dimension")->capture_default_str();
  th->add_option("--max-tokens", hd.max_tokens, "Title length cap")->capture_default_str();
  th->add_flag("--debias", debias, "Divide scores by their tier-1 category median before labelling");

  auto* tt = app.add_subcommand("train-thumbnail", "Train the thumbnail head (FVEC features) or tiny CNN (images)");
  add_train_flags(tt, tf);
  tt->add_flag("--debias", debias, "Divide scores by their tier-1 category median before labelling");

  auto* to = app.add_subcommand("train-opening", "Train the opening-scene attention model");
  std::size_t projection = 32, attention = 16;
  std::string backbone;
  add_train_flags(to, tf);
  to->add_option("--projection", projection, "Frame projection size")->capture_default_str();
  to->add_option("--attention", attention, "Attention dimension")->capture_default_str();
  to->add_option("--backbone", backbone, "Thumbnail model whose tiny CNN embeds frame directories");
  to->add_flag("--debias", debias, "Divide scores by their tier-1 category median before labelling");

  auto* sc = app.add_subcommand("score", "Score a title, thumbnail candidates or an opening scene");
  ScoreFlags sf;
  sc->add_option("--headline", sf.headline, "Headline checkpoint");
  sc->add_option("--title", sf.title, "Title to score");
  sc->add_option("--thumbnail", sf.thumbnail, "Thumbnail checkpoint");
  sc->add_option("--opening", sf.opening, "Opening-scene checkpoint");
  sc->add_option("--features", sf.features, "FVEC feature file (one row per frame)");
  sc->add_option("--frames", sf.frames, "Directory of frame_NNNNN.ppm/pgm images");
  sc->add_option("--saliency-out", sf.saliency_out, "Directory for opening-scene saliency PGMs");

  auto* ix = app.add_subcommand("index", "Build the tag index and query the archive");
  IndexFlags xf;
  ix->add_option("--out", xf.out, "Write the tag index JSON here");
  ix->add_option("--tag", xf.tag, "List videos and statistics for this tag");
  ix->add_option("--metric", xf.metric, "views, shares or comments")->capture_default_str();
  ix->add_option("--ask", xf.ask, "Answer a chat question against the archive");
  ix->add_option("--headline", xf.headline, "Headline checkpoint for chat title ratings");

  auto* sv = app.add_subcommand("serve", "Run the HTTP JSON service");
  ServeFlags vf;
  sv->add_option("--host", vf.host, "Bind address")->capture_default_str();
  sv->add_option("--port", vf.port, "Port (0 picks a free one)")->capture_default_str();
  sv->add_option("--threads", vf.threads, "Worker threads")->capture_default_str();
  sv->add_option("--headline", vf.headline, "Headline checkpoint");
  sv->add_option("--thumbnail", vf.thumbnail, "Thumbnail checkpoint");
  sv->add_option("--opening", vf.opening, "Opening-scene checkpoint");
  sv->add_option("--score-log", vf.score_log, "Append-only JSONL score history for /alert/check");

  auto* ab_cmd = app.add_subcommand("ab", "Lift of group B over group A with a bootstrap interval");
  std::string group_a, group_b;
  std::size_t resamples = service::kDefaultResamples;
  ab_cmd->add_option("--group-a", group_a, "Baseline view counts (whitespace separated or JSON array)")->required();
  ab_cmd->add_option("--group-b", group_b, "Treatment view counts")->required();
  ab_cmd->add_option("--resamples", resamples, "Bootstrap resamples")->capture_default_str();

  auto* sy = app.add_subcommand("synth", "Write a planted demo dataset");
  std::string synth_out;
  std::size_t synth_videos = 400;
  sy->add_option("--out", synth_out, "Output directory")->required();
  sy->add_option("--videos", synth_videos, "Videos per corpus")->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*th) return train_headline(g, tf, hd, debias);
    if (*tt) return train_thumbnail(g, tf, debias);
    if (*to) return train_opening(g, tf, projection, attention, backbone, debias);
    if (*sc) return score(g, sf);
    if (*ix) return index(g, xf);
    if (*sv) return serve(g, vf);
    if (*ab_cmd) return ab(g, group_a, group_b, resamples);
    if (*sy) return synth(g, synth_out, synth_videos);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}
