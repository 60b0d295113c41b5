#pragma once

// Attaches toxicity probabilities to event texts, either through a remote
// Perspective-style endpoint or a deterministic lexicon scorer, and loads
// external per-user score tables (e.g. bot scores).
//
// Remote results are cached on disk, keyed by SHA-256 of the UTF-8 text, in
// an append-only JSONL file of {"h": hex, "score": float}. Identical texts
// share one request and one cache entry.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <unordered_map>
#include <vector>

#include <openssl/evp.h>

#include <httplib.h>
#include <json.hpp>

#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/lexicon.hpp"
#include "ctu/log.hpp"
#include "ctu/parallel.hpp"
#include "ctu/timeline.hpp"

namespace ctu {

enum class ScorerMode { remote, offline };

struct ScorerConfig {
  ScorerMode mode = ScorerMode::offline;
  std::string endpoint_url;
  std::string api_key;
  double max_qps = 1.0;
  int max_retries = 3;
  std::filesystem::path cache_path;
  std::string attribute = "TOXICITY";
  // Upper bound on concurrent requests; the rate limit applies across all.
  std::size_t max_in_flight = 4;
  // Worker threads for the offline scorer.
  std::size_t parallelism = 1;
  std::chrono::milliseconds initial_backoff{1000};
  std::chrono::seconds request_timeout{30};
  Lexicon lexicon = default_lexicon();

  void validate() const {
    if (!(max_qps > 0)) throw ConfigError("max_qps must be positive");
    if (max_retries < 0) throw ConfigError("max_retries must be non-negative");
    if (max_in_flight == 0) throw ConfigError("max_in_flight must be positive");
    if (parallelism == 0) throw ConfigError("parallelism must be positive");
    if (mode == ScorerMode::remote) {
      if (endpoint_url.empty()) throw ConfigError("remote scoring needs an endpoint URL (--endpoint)");
      if (api_key.empty())
        throw ConfigError("remote scoring needs an API key; export it and pass the variable name via --api-key-env");
    }
  }
};

inline ScorerMode parse_scorer_mode(const std::string& s) {
  if (s == "remote") return ScorerMode::remote;
  if (s == "offline") return ScorerMode::offline;
  throw ConfigError("unknown scorer '" + s + "' (expected remote or offline)");
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out(2 * len, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xF];
  }
  return out;
}

// ---- offline scorer --------------------------------------------------------

namespace detail {

// Decodes one UTF-8 code point at s[i], advancing i. Invalid bytes decode
// as themselves so tokenization never fails.
inline char32_t next_code_point(std::string_view s, std::size_t& i) {
  const auto c = static_cast<unsigned char>(s[i]);
  std::size_t len = c < 0x80 ? 1 : (c & 0xE0) == 0xC0 ? 2 : (c & 0xF0) == 0xE0 ? 3 : (c & 0xF8) == 0xF0 ? 4 : 1;
  if (i + len > s.size()) len = 1;
  char32_t cp = len == 1 ? c : len == 2 ? (c & 0x1F) : len == 3 ? (c & 0x0F) : (c & 0x07);
  for (std::size_t k = 1; k < len; ++k) cp = (cp << 6) | (static_cast<unsigned char>(s[i + k]) & 0x3F);
  i += len;
  return cp;
}

inline bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09: case 0x0A: case 0x0B: case 0x0C: case 0x0D: case 0x20:
    case 0x85: case 0xA0: case 0x1680: case 0x2028: case 0x2029:
    case 0x202F: case 0x205F: case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

inline bool is_ascii_punct(char c) {
  return (c >= '!' && c <= '/') || (c >= ':' && c <= '@') || (c >= '[' && c <= '`') || (c >= '{' && c <= '~');
}

}  // namespace detail

// Splits on Unicode whitespace, lowercases ASCII letters and strips leading
// and trailing ASCII punctuation. Tokens that strip to nothing are dropped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string cur;
  auto flush = [&] {
    std::size_t b = 0, e = cur.size();
    while (b < e && detail::is_ascii_punct(cur[b])) ++b;
    while (e > b && detail::is_ascii_punct(cur[e - 1])) --e;
    if (e > b) tokens.emplace_back(cur.substr(b, e - b));
    cur.clear();
  };
  std::size_t i = 0;
  while (i < text.size()) {
    const std::size_t start = i;
    const char32_t cp = detail::next_code_point(text, i);
    if (detail::is_unicode_space(cp)) {
      flush();
      continue;
    }
    for (std::size_t k = start; k < i; ++k) {
      char c = text[k];
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
      cur.push_back(c);
    }
  }
  flush();
  return tokens;
}

// Fraction of tokens found in the lexicon.
inline double offline_score(std::string_view text, const Lexicon& lexicon) {
  if (text.empty()) throw EmptyInput("offline_score needs non-empty text");
  const auto tokens = tokenize(text);
  if (tokens.empty()) return 0.0;
  std::size_t flagged = 0;
  for (const auto& t : tokens) flagged += lexicon.count(t);
  return std::clamp(static_cast<double>(flagged) / static_cast<double>(tokens.size()), 0.0, 1.0);
}

// ---- cache -----------------------------------------------------------------

class ScoreCache {
 public:
  ScoreCache() = default;

  // Loads existing entries; a missing file is an empty cache. An empty path
  // gives a memory-only cache.
  explicit ScoreCache(std::filesystem::path path) : path_(std::move(path)) {
    if (path_.empty() || !std::filesystem::exists(path_)) return;
    std::ifstream in(path_);
    if (!in) throw IoError("cannot read score cache '" + path_.string() + "'");
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        entries_[j.at("h").get<std::string>()] = j.at("score").get<double>();
      } catch (const nlohmann::json::exception&) {
        // a torn final line from an interrupted run is expected; anything
        // earlier is corruption
        if (in.peek() != EOF) throw FormatError(lineno, "corrupt score cache entry in '" + path_.string() + "'");
        log::warn("score", "ignoring torn cache line", {{"path", path_.string()}, {"line", lineno}});
      }
    }
  }

  std::optional<double> get(const std::string& hash) const {
    std::lock_guard lock(mutex_);
    auto it = entries_.find(hash);
    if (it == entries_.end()) return std::nullopt;
    return it->second;
  }

  void put(const std::string& hash, double score) {
    std::lock_guard lock(mutex_);
    if (!entries_.emplace(hash, score).second) return;
    if (path_.empty()) return;
    if (!out_.is_open()) {
      if (path_.has_parent_path()) std::filesystem::create_directories(path_.parent_path());
      out_.open(path_, std::ios::app);
      if (!out_) throw IoError("cannot append to score cache '" + path_.string() + "'");
    }
    out_ << "{\"h\":\"" << hash << "\",\"score\":" << fmt::shortest(score) << "}\n";
    out_.flush();
    if (!out_) throw IoError("write failure on score cache '" + path_.string() + "'");
  }

  std::size_t size() const {
    std::lock_guard lock(mutex_);
    return entries_.size();
  }

 private:
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::unordered_map<std::string, double> entries_;
  std::ofstream out_;
};

// ---- rate limiting ---------------------------------------------------------

// Hands out request slots spaced at least 1/qps apart, so the aggregate
// rate over any window never exceeds qps regardless of how many workers
// share it.
class RateLimiter {
 public:
  explicit RateLimiter(double qps)
      : interval_(std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(1.0 / qps))) {}

  void acquire() {
    Clock::time_point slot;
    {
      std::lock_guard lock(mutex_);
      const auto now = Clock::now();
      slot = std::max(now, next_);
      next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
  }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::duration interval_;
  Clock::time_point next_{};
  std::mutex mutex_;
};

// ---- remote client ---------------------------------------------------------

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;    // including any query string
};

inline Endpoint split_endpoint(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ConfigError("endpoint URL needs a scheme: '" + url + "'");
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

inline std::string perspective_request_body(std::string_view text, const std::string& attribute) {
  nlohmann::json body;
  body["comment"]["text"] = text;
  body["requestedAttributes"][attribute] = nlohmann::json::object();
  return body.dump();
}

inline double parse_perspective_response(const std::string& body, const std::string& attribute) {
  double v;
  try {
    v = nlohmann::json::parse(body).at("attributeScores").at(attribute).at("summaryScore").at("value").get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw RemoteError(200, std::string("unexpected response shape: ") + e.what());
  }
  if (!(v >= 0.0 && v <= 1.0)) throw RemoteError(200, "score " + fmt::shortest(v) + " outside [0,1]");
  return v;
}

class PerspectiveClient {
 public:
  PerspectiveClient(const ScorerConfig& cfg, RateLimiter& limiter) : cfg_(cfg), limiter_(limiter) {
    const auto ep = split_endpoint(cfg.endpoint_url);
    origin_ = ep.origin;
    path_ = ep.path + (ep.path.find('?') == std::string::npos ? "?key=" : "&key=") + cfg.api_key;
  }

  // Scores one text, retrying 429 and 5xx with exponential backoff.
  double score(std::string_view text) {
    httplib::Client client(origin_);
    client.set_connection_timeout(cfg_.request_timeout);
    client.set_read_timeout(cfg_.request_timeout);
    const auto body = perspective_request_body(text, cfg_.attribute);
    auto backoff = cfg_.initial_backoff;
    for (int attempt = 0;; ++attempt) {
      limiter_.acquire();
      auto res = client.Post(path_, body, "application/json");
      if (!res) throw RemoteError(0, "request failed: " + httplib::to_string(res.error()));
      if (res->status == 200) return parse_perspective_response(res->body, cfg_.attribute);
      const bool retryable = res->status == 429 || (res->status >= 500 && res->status < 600);
      if (!retryable || attempt >= cfg_.max_retries) throw RemoteError(res->status, res->body);
      log::warn("score", "retrying remote request", {{"status", res->status}, {"attempt", attempt + 1},
                                                     {"backoff_ms", backoff.count()}});
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
  }

 private:
  const ScorerConfig& cfg_;
  RateLimiter& limiter_;
  std::string origin_;
  std::string path_;
};

struct ScoreStats {
  std::size_t scored_events = 0;
  std::size_t distinct_texts = 0;
  std::size_t cache_hits = 0;
  std::size_t remote_requests = 0;
};

// Fills in toxicity for every unscored event. Already-scored events are left
// as they are.
inline Corpus score_corpus(Corpus corpus, const ScorerConfig& cfg, ScoreStats* stats = nullptr) {
  cfg.validate();
  ScoreStats st;

  std::vector<Event*> pending;
  for (auto& [user, tl] : corpus.timelines)
    for (auto& e : tl.events) {
      if (e.toxicity) continue;
      if (!e.text || e.text->empty()) throw MissingText(user, e.event_id);
      pending.push_back(&e);
    }
  st.scored_events = pending.size();

  if (cfg.mode == ScorerMode::offline) {
    parallel_for(pending.size(), cfg.parallelism,
                 [&](std::size_t i) { pending[i]->toxicity = offline_score(*pending[i]->text, cfg.lexicon); });
    st.distinct_texts = pending.size();
  } else if (!pending.empty()) {
    ScoreCache cache(cfg.cache_path);
    // distinct texts, in first-seen order
    std::unordered_map<std::string, std::size_t> index;
    std::vector<std::pair<std::string, const std::string*>> texts;
    std::vector<std::size_t> slot_of(pending.size());
    for (std::size_t i = 0; i < pending.size(); ++i) {
      auto h = sha256_hex(*pending[i]->text);
      auto [it, fresh] = index.emplace(h, texts.size());
      if (fresh) texts.emplace_back(std::move(h), &*pending[i]->text);
      slot_of[i] = it->second;
    }
    st.distinct_texts = texts.size();

    std::vector<double> scores(texts.size(), 0.0);
    std::vector<std::size_t> to_fetch;
    for (std::size_t k = 0; k < texts.size(); ++k) {
      if (auto hit = cache.get(texts[k].first)) {
        scores[k] = *hit;
        ++st.cache_hits;
      } else {
        to_fetch.push_back(k);
      }
    }

    RateLimiter limiter(cfg.max_qps);
    PerspectiveClient client(cfg, limiter);
    parallel_for(to_fetch.size(), cfg.max_in_flight, [&](std::size_t i) {
      const std::size_t k = to_fetch[i];
      scores[k] = client.score(*texts[k].second);
      cache.put(texts[k].first, scores[k]);
    });
    st.remote_requests = to_fetch.size();

    for (std::size_t i = 0; i < pending.size(); ++i) pending[i]->toxicity = scores[slot_of[i]];
  }

  log::info("score", "scoring finished",
            {{"events", st.scored_events}, {"distinct_texts", st.distinct_texts}, {"cache_hits", st.cache_hits},
             {"remote_texts", st.remote_requests}});
  if (stats) *stats = st;
  return corpus;
}

// ---- external per-user scores ----------------------------------------------

struct UserScoreTable {
  std::string label = "bot_score";
  std::map<std::string, double> entries;
};

inline UserScoreTable attach_user_scores(const std::filesystem::path& path, std::string label = "bot_score") {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  csv::Reader reader(in);
  std::vector<std::string> f;
  if (!reader.next(f)) throw FormatError(1, "empty score file");
  if (!f.empty() && f[0].rfind("\xEF\xBB\xBF", 0) == 0) f[0].erase(0, 3);
  if (f != std::vector<std::string>{"user_id", "score"}) throw FormatError(1, "expected header user_id,score");

  UserScoreTable table;
  table.label = std::move(label);
  while (reader.next(f)) {
    const auto line = reader.record_line();
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != 2) throw FormatError(line, "expected 2 fields, got " + std::to_string(f.size()));
    if (f[0].empty()) throw FormatError(line, "empty user_id");
    double v = 0;
    auto [ptr, ec] = std::from_chars(f[1].data(), f[1].data() + f[1].size(), v);
    if (ec != std::errc{} || ptr != f[1].data() + f[1].size() || f[1].empty())
      throw FormatError(line, "score '" + f[1] + "' is not a number");
    if (!(v >= 0.0 && v <= 1.0)) throw ValidationError(f[0], "score " + f[1] + " outside [0,1]");
    table.entries[f[0]] = v;
  }
  return table;
}

}  // namespace ctu
