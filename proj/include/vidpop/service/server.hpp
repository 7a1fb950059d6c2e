#pragma once

#include <cstdio>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <zlib.h>

#include "httplib.h"
#include "json.hpp"
#include "vidpop/archive.hpp"
#include "vidpop/chat.hpp"
#include "vidpop/datapipe.hpp"
#include "vidpop/headline.hpp"
#include "vidpop/service/ab.hpp"
#include "vidpop/service/alert.hpp"
#include "vidpop/service/score_log.hpp"
#include "vidpop/visual.hpp"

namespace vidpop::service {

using nlohmann::json;

/// Every path is optional; an endpoint whose model is not configured answers
/// 400 ConfigError. A configured path that does not exist fails startup.
struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::optional<std::filesystem::path> headline_model;
  std::optional<std::filesystem::path> embeddings;  // required with headline_model
  std::optional<std::filesystem::path> thumbnail_model;
  std::optional<std::filesystem::path> opening_model;
  std::optional<std::filesystem::path> corpus;  // archive for /chat
  std::optional<std::filesystem::path> score_log;
  std::size_t threads = 8;
};

/// Immutable snapshot of everything loaded from disk.
struct ModelSet {
  std::optional<headline::HeadlineModel> headline;
  std::optional<data::EmbeddingTable> embeddings;
  std::optional<visual::ThumbnailModel> thumbnail;
  std::optional<visual::OpeningBundle> opening;
  std::optional<data::Corpus> corpus;
  archive::TagIndex index;
  json manifest = json::object();  // name -> {path, checksum}

  chat::ChatBackend chat_backend() const {
    return {corpus ? &*corpus : nullptr, corpus ? &index : nullptr, headline ? &*headline : nullptr,
            embeddings ? &*embeddings : nullptr};
  }
};

namespace detail {

inline std::string crc32_hex(const std::vector<std::filesystem::path>& files) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  for (const auto& f : files) {
    const std::string bytes = nn::detail::read_file(f);
    crc = ::crc32(crc, reinterpret_cast<const Bytef*>(bytes.data()), static_cast<uInt>(bytes.size()));
  }
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

inline void require_file(const std::filesystem::path& p, const char* what) {
  if (!std::filesystem::is_regular_file(p)) fail(ErrorCode::IoError, std::string("missing ") + what + " file: " + p.string());
}

inline void record_model(json& manifest, const char* name, const std::filesystem::path& p, bool has_sidecar = true) {
  std::vector<std::filesystem::path> files{p};
  if (has_sidecar) files.push_back(nn::sidecar_path(p));
  manifest[name] = {{"path", p.string()}, {"checksum", crc32_hex(files)}};
}

}  // namespace detail

inline std::shared_ptr<const ModelSet> load_models(const ServiceConfig& cfg) {
  auto m = std::make_shared<ModelSet>();
  if (cfg.headline_model) {
    detail::require_file(*cfg.headline_model, "headline model");
    detail::require_file(nn::sidecar_path(*cfg.headline_model), "headline model sidecar");
    if (!cfg.embeddings) fail(ErrorCode::ConfigError, "headline model needs an embeddings file");
    detail::require_file(*cfg.embeddings, "embeddings");
    auto loaded = headline::load_headline_model(*cfg.headline_model);
    m->embeddings = data::load_embeddings(*cfg.embeddings, loaded.model.dims().embedding_dim);
    m->headline = std::move(loaded.model);
    detail::record_model(m->manifest, "headline", *cfg.headline_model);
    detail::record_model(m->manifest, "embeddings", *cfg.embeddings, false);
    m->manifest["embeddings"]["vocab_hash"] = m->embeddings->vocab_hash();
    m->manifest["headline"]["vocab_hash"] = loaded.vocab_hash;
  }
  if (cfg.thumbnail_model) {
    detail::require_file(*cfg.thumbnail_model, "thumbnail model");
    detail::require_file(nn::sidecar_path(*cfg.thumbnail_model), "thumbnail model sidecar");
    m->thumbnail = visual::load_thumbnail_model(*cfg.thumbnail_model);
    detail::record_model(m->manifest, "thumbnail", *cfg.thumbnail_model);
    m->manifest["thumbnail"]["backbone"] = m->thumbnail->backbone_name();
  }
  if (cfg.opening_model) {
    detail::require_file(*cfg.opening_model, "opening model");
    detail::require_file(nn::sidecar_path(*cfg.opening_model), "opening model sidecar");
    m->opening = visual::load_opening_model(*cfg.opening_model);
    detail::record_model(m->manifest, "opening", *cfg.opening_model);
    m->manifest["opening"]["backbone"] = m->opening->backbone ? "tinycnn" : "external";
  }
  if (cfg.corpus) {
    detail::require_file(*cfg.corpus, "corpus");
    m->corpus = data::load_corpus(*cfg.corpus);
    m->index = archive::build_tag_index(*m->corpus);
    detail::record_model(m->manifest, "corpus", *cfg.corpus, false);
  }
  return m;
}

struct Reply {
  int status = 200;
  json body;
};

inline Reply error_reply(ErrorCode code, const std::string& message) {
  return {400, {{"error_code", std::string(to_string(code))}, {"message", message}}};
}

namespace detail {

inline json parse_body(const httplib::Request& req) {
  if (req.body.empty()) fail(ErrorCode::FormatError, "request body must be a JSON object");
  json j = json::parse(req.body);  // parse_error maps to FormatError
  if (!j.is_object()) fail(ErrorCode::FormatError, "request body must be a JSON object");
  return j;
}

inline const json& field(const json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorCode::FormatError, std::string("missing field '") + name + "'");
  return j.at(name);
}

inline std::vector<nn::Vec> matrix(const json& j, const char* name) {
  const json& m = field(j, name);
  if (!m.is_array()) fail(ErrorCode::FormatError, std::string("'") + name + "' must be an array of rows");
  std::vector<nn::Vec> rows;
  for (const auto& r : m) rows.push_back(r.get<nn::Vec>());
  return rows;
}

inline std::vector<visual::Image> frame_uploads(const httplib::Request& req) {
  std::vector<visual::Image> out;
  for (const auto& f : req.get_file_values("frames")) out.push_back(visual::decode_netpbm(f.content));
  return out;
}

inline json saliency_json(const visual::SaliencyMap& m) {
  return {{"frame_index", m.frame_index},
          {"width", m.width},
          {"height", m.height},
          {"raw_min", m.raw_min},
          {"raw_max", m.raw_max},
          {"pgm_base64", httplib::detail::base64_encode(visual::encode_netpbm(visual::saliency_image(m)))}};
}

inline std::string category_key(const json& c) {
  if (c.is_string()) return c.get<std::string>();
  if (c.is_object()) return c.at("tier1").get<std::string>() + "/" + c.at("tier2").get<std::string>();
  fail(ErrorCode::FormatError, "'category' must be a string or {tier1, tier2}");
}

}  // namespace detail

/// Request handling over a swappable model snapshot and the score log.
/// Handlers never mutate models; only /alert/check with "record": true
/// appends to the log.
class Service {
 public:
  explicit Service(ServiceConfig cfg) : cfg_(std::move(cfg)), models_(load_models(cfg_)) {
    if (cfg_.score_log) log_ = std::make_unique<ScoreLog>(*cfg_.score_log);
    else log_ = std::make_unique<ScoreLog>();
  }

  const ServiceConfig& config() const { return cfg_; }

  std::shared_ptr<const ModelSet> models() const {
    std::lock_guard lock(mu_);
    return models_;
  }

  /// Loads a fresh snapshot and swaps it in whole; in-flight requests keep
  /// the snapshot they started with.
  void reload() {
    auto fresh = load_models(cfg_);
    std::lock_guard lock(mu_);
    models_ = std::move(fresh);
  }

  ScoreLog& score_log() { return *log_; }

  Reply headline_score(const httplib::Request& req) const {
    return guarded([&] {
      const json body = detail::parse_body(req);
      const auto m = models();
      if (!m->headline) fail(ErrorCode::ConfigError, "no headline model loaded");
      const auto s = headline::score_headline(detail::field(body, "title").get<std::string>(), *m->headline,
                                              *m->embeddings);
      json contrib = json::array();
      for (const auto& c : s.contributions) contrib.push_back({{"token", c.token}, {"weight", c.weight}});
      return Reply{200, {{"probability_popular", s.probability_popular},
                         {"contributions", contrib},
                         {"oov_tokens", s.oov_tokens}}};
    });
  }

  Reply thumbnail_recommend(const httplib::Request& req) const {
    return guarded([&] {
      const auto m = models();
      if (!m->thumbnail) fail(ErrorCode::ConfigError, "no thumbnail model loaded");
      visual::ThumbnailRecommendation r;
      if (req.is_multipart_form_data()) {
        if (req.has_file("features")) {
          const auto fm = data::decode_feature_file(req.get_file_value("features").content);
          r = visual::recommend_from_features(fm.rows_as_double(), m->thumbnail->head);
        } else if (req.has_file("frames")) {
          r = m->thumbnail->recommend_images(detail::frame_uploads(req));
        } else {
          fail(ErrorCode::FormatError, "multipart upload needs a 'features' FVEC file or 'frames' images");
        }
      } else {
        r = visual::recommend_from_features(detail::matrix(detail::parse_body(req), "features"), m->thumbnail->head);
      }
      return Reply{200, {{"scores", r.scores}, {"best_frame", r.best_frame}, {"frame_count", r.scores.size()}}};
    });
  }

  Reply video_score(const httplib::Request& req) const {
    return guarded([&] {
      const auto m = models();
      if (!m->opening) fail(ErrorCode::ConfigError, "no opening model loaded");
      json saliency = json::array();
      visual::OpeningScore s;
      if (req.is_multipart_form_data()) {
        const auto v = visual::score_video_frames(detail::frame_uploads(req), *m->opening);
        s = v.score;
        for (const auto& map : v.saliency) saliency.push_back(detail::saliency_json(map));
      } else {
        s = visual::score_opening(detail::matrix(detail::parse_body(req), "features"), m->opening->model);
      }
      return Reply{200, {{"probability_popular", s.probability_popular},
                         {"frame_attention", s.frame_attention},
                         {"saliency", saliency}}};
    });
  }

  Reply alert_check_endpoint(const httplib::Request& req) {
    return guarded([&] {
      const json body = detail::parse_body(req);
      const double score = detail::field(body, "score").get<double>();
      const std::string category = detail::category_key(detail::field(body, "category"));
      const auto r = category_alert_check(score, log_->history(category));
      if (body.value("record", false)) log_->append(category, score);
      return Reply{200, {{"category", category},
                         {"score", score},
                         {"normalized_score", r.decision.score},
                         {"threshold", r.decision.threshold},
                         {"category_median", r.category_median},
                         {"alert", r.decision.alert},
                         {"history_size", r.decision.history_size}}};
    });
  }

  Reply chat_endpoint(const httplib::Request& req) const {
    return guarded([&] {
      const json body = detail::parse_body(req);
      const auto m = models();
      const auto intent =
          chat::parse_utterance(detail::field(body, "text").get<std::string>(), m->index.vocabulary());
      json out = chat::intent_to_json(intent);
      out["response"] = chat::respond(intent, m->chat_backend());
      return Reply{200, out};
    });
  }

  Reply ab_lift_endpoint(const httplib::Request& req) const {
    return guarded([&] {
      const json body = detail::parse_body(req);
      const auto a = detail::field(body, "group_a").get<std::vector<double>>();
      const auto b = detail::field(body, "group_b").get<std::vector<double>>();
      const auto seed = body.value("seed", std::uint64_t{0});
      const auto resamples = body.value("resamples", kDefaultResamples);
      if (resamples > 1000000) fail(ErrorCode::ConfigError, "resamples must be at most 1000000");
      const auto r = ab_lift(a, b, seed, resamples);
      return Reply{200, {{"mean_a", r.mean_a},
                         {"mean_b", r.mean_b},
                         {"lift_percent", r.lift_percent},
                         {"ci_low", r.ci_low},
                         {"ci_high", r.ci_high},
                         {"n_a", r.n_a},
                         {"n_b", r.n_b},
                         {"resamples", r.resamples},
                         {"seed", seed}}};
    });
  }

  Reply health() const {
    const auto m = models();
    json out{{"status", "ok"}, {"models", m->manifest}, {"score_log", log_->sizes()}};
    out["archive"] = {{"videos", m->corpus ? m->corpus->size() : 0}, {"tags", m->index.size()}};
    return {200, out};
  }

  /// Registers every route on `server`.
  void install(httplib::Server& server) {
    const auto route = [](auto fn) {
      return [fn](const httplib::Request& req, httplib::Response& res) {
        const Reply r = fn(req);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
      };
    };
    server.Post("/headline/score", route([this](const auto& q) { return headline_score(q); }));
    server.Post("/thumbnail/recommend", route([this](const auto& q) { return thumbnail_recommend(q); }));
    server.Post("/video/score", route([this](const auto& q) { return video_score(q); }));
    server.Post("/alert/check", route([this](const auto& q) { return alert_check_endpoint(q); }));
    server.Post("/chat", route([this](const auto& q) { return chat_endpoint(q); }));
    server.Post("/ab/lift", route([this](const auto& q) { return ab_lift_endpoint(q); }));
    server.Get("/health", route([this](const auto&) { return health(); }));
    server.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
      if (!res.body.empty()) return;
      const json body{{"error_code", res.status == 404 ? "NotFound" : "HttpError"},
                      {"message", req.method + " " + req.path + " -> " + std::to_string(res.status)}};
      res.set_content(body.dump(), "application/json");
    });
  }

 private:
  template <class Fn>
  static Reply guarded(Fn&& fn) {
    try {
      return fn();
    } catch (const Error& e) {
      return error_reply(e.code(), e.what());
    } catch (const json::exception& e) {
      return error_reply(ErrorCode::FormatError, e.what());
    } catch (const std::exception& e) {
      return {500, {{"error_code", "InternalError"}, {"message", e.what()}}};
    }
  }

  ServiceConfig cfg_;
  mutable std::mutex mu_;
  std::shared_ptr<const ModelSet> models_;
  std::unique_ptr<ScoreLog> log_;
};

/// A Service listening on its own thread until stop() or destruction.
class ServiceHandle {
 public:
  explicit ServiceHandle(ServiceConfig cfg) : service_(std::make_unique<Service>(std::move(cfg))) {
    const auto& c = service_->config();
    server_.new_task_queue = [n = c.threads] { return new httplib::ThreadPool(n); };
    service_->install(server_);
    if (c.port == 0) {
      port_ = server_.bind_to_any_port(c.host);
    } else if (server_.bind_to_port(c.host, c.port)) {
      port_ = c.port;
    }
    if (port_ <= 0) fail(ErrorCode::IoError, "cannot bind " + c.host + ":" + std::to_string(c.port));
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~ServiceHandle() { stop(); }
  ServiceHandle(const ServiceHandle&) = delete;
  ServiceHandle& operator=(const ServiceHandle&) = delete;

  int port() const { return port_; }
  const std::string& host() const { return service_->config().host; }
  Service& service() { return *service_; }

  void stop() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  /// Blocks until the server stops.
  void wait() {
    if (thread_.joinable()) thread_.join();
  }

 private:
  std::unique_ptr<Service> service_;
  httplib::Server server_;
  int port_ = -1;
  std::thread thread_;
};

inline std::unique_ptr<ServiceHandle> serve(ServiceConfig cfg) { return std::make_unique<ServiceHandle>(std::move(cfg)); }

}  // namespace vidpop::service
