#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "vidpop/archive/tag_index.hpp"
#include "vidpop/datapipe/embeddings.hpp"
#include "vidpop/datapipe/record.hpp"
#include "vidpop/error.hpp"
#include "vidpop/headline/model.hpp"

namespace vidpop::chat {

enum class IntentName { FindByTag, TagStats, RateTitle, Help };
enum class Confidence { matched, fallback };

constexpr const char* intent_name(IntentName n) {
  switch (n) {
    case IntentName::FindByTag: return "FindByTag";
    case IntentName::TagStats: return "TagStats";
    case IntentName::RateTitle: return "RateTitle";
    case IntentName::Help: return "Help";
  }
  return "?";
}

inline IntentName parse_intent_name(std::string_view s) {
  for (IntentName n : {IntentName::FindByTag, IntentName::TagStats, IntentName::RateTitle, IntentName::Help}) {
    if (s == intent_name(n)) return n;
  }
  fail(ErrorCode::ConfigError, "unknown intent '" + std::string(s) + "'");
}

/// Parsed utterance. Required slots: FindByTag {tag}, TagStats {tag, metric},
/// RateTitle {title}. Help may carry a `tag` slot holding an unrecognised tag
/// the user asked about.
struct Intent {
  IntentName name = IntentName::Help;
  std::map<std::string, std::string> slots;
  Confidence confidence = Confidence::fallback;

  friend bool operator==(const Intent&, const Intent&) = default;
};

inline nlohmann::json intent_to_json(const Intent& i) {
  return {{"intent", intent_name(i.name)},
          {"slots", i.slots},
          {"confidence", i.confidence == Confidence::matched ? "matched" : "fallback"}};
}

namespace detail {

inline bool is_word_byte(char c) {
  const auto u = static_cast<unsigned char>(c);
  return (u >= '0' && u <= '9') || (u >= 'a' && u <= 'z') || (u >= 'A' && u <= 'Z') || u >= 0x80;
}

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  }
  return out;
}

inline std::string trim(std::string_view s, std::string_view chars = " \t\r\n") {
  const auto b = s.find_first_not_of(chars);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(chars);
  return std::string(s.substr(b, e - b + 1));
}

/// Position of the first whole-word occurrence of `phrase` in `text`, or npos.
inline std::size_t find_phrase(std::string_view text, std::string_view phrase, std::size_t from = 0) {
  if (phrase.empty()) return std::string_view::npos;
  for (auto p = text.find(phrase, from); p != std::string_view::npos; p = text.find(phrase, p + 1)) {
    const bool left = p == 0 || !is_word_byte(text[p - 1]);
    const std::size_t end = p + phrase.size();
    const bool right = end == text.size() || !is_word_byte(text[end]);
    if (left && right) return p;
  }
  return std::string_view::npos;
}

inline bool has_phrase(std::string_view text, std::string_view phrase) {
  return find_phrase(text, phrase) != std::string_view::npos;
}

/// Longest vocabulary tag occurring as a whole phrase; ties go to the
/// earliest occurrence, then alphabetical order.
inline std::string match_tag(std::string_view lowered, const std::vector<std::string>& vocabulary) {
  std::string best;
  std::size_t best_pos = std::string_view::npos;
  for (const auto& raw : vocabulary) {
    const std::string tag = archive::normalize_tag(raw);
    const std::size_t pos = find_phrase(lowered, tag);
    if (pos == std::string_view::npos) continue;
    const bool better = tag.size() > best.size() ||
                        (tag.size() == best.size() && (pos < best_pos || (pos == best_pos && tag < best)));
    if (better) {
      best = tag;
      best_pos = pos;
    }
  }
  return best;
}

/// Word following the last "about" / "tagged" / "for" / "on" marker.
inline std::string candidate_tag(std::string_view lowered) {
  std::size_t after = std::string_view::npos;
  for (std::string_view m : {"about", "tagged", "for", "on"}) {
    for (auto p = find_phrase(lowered, m); p != std::string_view::npos; p = find_phrase(lowered, m, p + 1)) {
      if (after == std::string_view::npos || p + m.size() > after) after = p + m.size();
    }
  }
  if (after == std::string_view::npos) return {};
  std::size_t b = after;
  while (b < lowered.size() && !is_word_byte(lowered[b])) ++b;
  std::size_t e = b;
  while (e < lowered.size() && (is_word_byte(lowered[e]) || lowered[e] == '-')) ++e;
  return std::string(lowered.substr(b, e - b));
}

inline std::string rate_title_slot(std::string_view text, std::string_view lowered) {
  if (const auto colon = text.find(':'); colon != std::string_view::npos) {
    return trim(text.substr(colon + 1), " \t\r\n\"'");
  }
  std::size_t kw_end = std::string_view::npos;
  std::size_t kw_pos = std::string_view::npos;
  for (std::string_view k : {"rate", "title"}) {
    const auto p = find_phrase(lowered, k);
    if (p != std::string_view::npos && p < kw_pos) {
      kw_pos = p;
      kw_end = p + k.size();
    }
  }
  std::string rest = trim(text.substr(kw_end), " \t\r\n");
  // Drop connective words between the keyword and the title itself.
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (std::string_view f : {"my", "title", "headline"}) {
      const std::string low = lower(rest);
      if (low.rfind(f, 0) == 0 && (low.size() == f.size() || !is_word_byte(low[f.size()]))) {
        rest = trim(std::string_view(rest).substr(f.size()), " \t\r\n");
        stripped = true;
      }
    }
  }
  return trim(rest, " \t\r\n\"'");
}

}  // namespace detail

/// Keyword decision tree: rating keywords first, then statistics keywords
/// with a vocabulary tag, then search keywords with a vocabulary tag, else
/// Help. Total and deterministic.
inline Intent parse_utterance(std::string_view text, const std::vector<std::string>& tag_vocabulary) {
  using detail::has_phrase;
  const std::string low = detail::lower(text);
  Intent help;

  if (has_phrase(low, "rate") || has_phrase(low, "title")) {
    std::string title = detail::rate_title_slot(text, low);
    if (!title.empty()) return {IntentName::RateTitle, {{"title", std::move(title)}}, Confidence::matched};
    return help;
  }

  const bool stats = has_phrase(low, "how many") || has_phrase(low, "views") || has_phrase(low, "shares") ||
                     has_phrase(low, "comments") || has_phrase(low, "stats");
  const bool find = has_phrase(low, "show") || has_phrase(low, "find") || has_phrase(low, "videos about");
  if (!stats && !find) return help;

  const std::string tag = detail::match_tag(low, tag_vocabulary);
  if (tag.empty()) {
    if (std::string cand = detail::candidate_tag(low); !cand.empty()) help.slots["tag"] = std::move(cand);
    return help;
  }
  if (stats) {
    std::string metric = "views";
    std::size_t first = std::string::npos;
    for (const char* m : {"views", "shares", "comments"}) {
      const auto p = detail::find_phrase(low, m);
      if (p < first) {
        first = p;
        metric = m;
      }
    }
    return {IntentName::TagStats, {{"tag", tag}, {"metric", metric}}, Confidence::matched};
  }
  return {IntentName::FindByTag, {{"tag", tag}}, Confidence::matched};
}

/// Services the responder reads from; any pointer may be null, in which case
/// the matching intents answer with an "unavailable" message.
struct ChatBackend {
  const data::Corpus* corpus = nullptr;
  const archive::TagIndex* index = nullptr;
  const headline::HeadlineModel* headline = nullptr;
  const data::EmbeddingTable* embeddings = nullptr;
};

inline constexpr std::size_t kMaxListed = 10;
inline constexpr std::size_t kTopWords = 3;

inline constexpr std::string_view kArchiveUnavailable = "The video archive is not available right now.";

inline constexpr std::string_view kHelpText =
    "I can answer questions about the video archive:\n"
    "- show videos about <tag>\n"
    "- how many views (or shares, comments) for <tag>\n"
    "- rate title: <headline>";

/// Integers print without decimals, other values with up to two.
inline std::string format_number(double x) {
  char buf[64];
  if (std::fabs(x - std::round(x)) < 1e-9 && std::fabs(x) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.0f", x);
    return buf;
  }
  std::snprintf(buf, sizeof buf, "%.2f", x);
  std::string s = buf;
  while (s.back() == '0') s.pop_back();
  if (s.back() == '.') s.pop_back();
  return s;
}

namespace detail {

inline std::string no_videos(const archive::TagIndex& index, const std::string& tag) {
  std::string msg = "Sorry, I found no videos tagged '" + tag + "'.";
  const auto sugg = archive::suggest_tags(index, tag);
  if (!sugg.empty()) {
    msg += " Did you mean: ";
    for (std::size_t i = 0; i < sugg.size(); ++i) msg += (i ? ", " : "") + sugg[i];
    msg += "?";
  }
  return msg;
}

inline const std::string& slot(const Intent& intent, const std::string& name) {
  auto it = intent.slots.find(name);
  if (it == intent.slots.end() || it->second.empty()) fail(ErrorCode::ConfigError, "missing slot '" + name + "'");
  return it->second;
}

inline std::string respond_find(const Intent& intent, const ChatBackend& b) {
  const std::string& tag = slot(intent, "tag");
  auto q = archive::query_by_tag(*b.index, *b.corpus, tag);
  if (q.records.empty()) return no_videos(*b.index, archive::normalize_tag(tag));
  std::stable_sort(q.records.begin(), q.records.end(),
                   [](const data::VideoRecord& x, const data::VideoRecord& y) { return x.views > y.views; });
  const std::size_t n = q.records.size();
  const std::size_t shown = std::min(n, kMaxListed);
  std::string msg = n > shown ? "Top " + std::to_string(shown) + " of " + std::to_string(n) + " videos tagged '"
                              : std::to_string(n) + (n == 1 ? " video" : " videos") + " tagged '";
  msg += archive::normalize_tag(tag) + "':";
  for (std::size_t i = 0; i < shown; ++i) {
    msg += "\n- " + q.records[i].title + " (" + std::to_string(q.records[i].views) + " views)";
  }
  return msg;
}

inline std::string respond_stats(const Intent& intent, const ChatBackend& b) {
  const std::string& tag = slot(intent, "tag");
  const std::string& metric = slot(intent, "metric");
  if (!b.index->find(tag)) return no_videos(*b.index, archive::normalize_tag(tag));
  const auto s = archive::tag_stats(*b.index, *b.corpus, tag, metric);
  return "Videos tagged '" + s.tag + "': count " + std::to_string(s.count) + ", mean " + format_number(s.mean) +
         ", median " + format_number(s.median) + ", total " + std::to_string(s.total) + " " +
         archive::metric_name(s.metric) + ".";
}

inline std::string respond_rate(const Intent& intent, const ChatBackend& b) {
  const std::string& title = slot(intent, "title");
  const auto s = headline::score_headline(title, *b.headline, *b.embeddings);
  std::vector<std::size_t> order(s.contributions.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    return s.contributions[x].weight > s.contributions[y].weight;
  });
  char prob[32];
  std::snprintf(prob, sizeof prob, "%.2f", s.probability_popular);
  std::string msg = std::string("Popularity probability ") + prob + ". Top words:";
  for (std::size_t i = 0; i < order.size() && i < kTopWords; ++i) {
    char w[32];
    std::snprintf(w, sizeof w, "%.2f", s.contributions[order[i]].weight);
    msg += std::string(i ? ", " : " ") + s.contributions[order[i]].token + " (" + w + ")";
  }
  return msg + ".";
}

}  // namespace detail

/// Renders an intent as a user-facing message. Never throws: every failure
/// becomes a readable sentence.
inline std::string respond(const Intent& intent, const ChatBackend& backend) noexcept {
  try {
    const bool archive_ready = backend.corpus && backend.index;
    switch (intent.name) {
      case IntentName::Help: {
        auto it = intent.slots.find("tag");
        if (it != intent.slots.end() && !it->second.empty()) {
          const std::string first = archive_ready ? detail::no_videos(*backend.index, archive::normalize_tag(it->second))
                                                  : std::string(kArchiveUnavailable);
          return first + "\n" + std::string(kHelpText);
        }
        return std::string(kHelpText);
      }
      case IntentName::FindByTag:
        if (!archive_ready) return std::string(kArchiveUnavailable);
        return detail::respond_find(intent, backend);
      case IntentName::TagStats:
        if (!archive_ready) return std::string(kArchiveUnavailable);
        return detail::respond_stats(intent, backend);
      case IntentName::RateTitle:
        if (!backend.headline || !backend.embeddings) return "Headline scoring is not available right now.";
        return detail::respond_rate(intent, backend);
    }
    return std::string(kHelpText);
  } catch (const Error& e) {
    switch (e.code()) {
      case ErrorCode::EmptyTitle: return "That title has no words I can score.";
      case ErrorCode::ConfigError: return std::string("Sorry, I could not understand that request: ") + e.what();
      default: return std::string("Sorry, that request failed (") + std::string(to_string(e.code())) + ").";
    }
  } catch (...) {
    try {
      return "Sorry, something went wrong.";
    } catch (...) {
      return {};
    }
  }
}

}  // namespace vidpop::chat
