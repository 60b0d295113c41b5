#pragma once

// Core domain types (Event, Timeline, Corpus), ingestion from JSONL/CSV,
// canonical export, and the structural operations every metric builds on.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/format.hpp"
#include "ctu/log.hpp"
#include "ctu/parallel.hpp"
#include "ctu/timestamp.hpp"

namespace ctu {

// One post. The owning user id is carried by the Timeline, not repeated
// on every event.
struct Event {
  std::string event_id;
  EpochSeconds timestamp = 0;
  std::optional<std::string> text;
  std::optional<double> toxicity;

  friend bool operator==(const Event&, const Event&) = default;
};

// Events sorted by (timestamp, event_id) with unique event ids.
struct Timeline {
  std::string user_id;
  std::vector<Event> events;

  std::size_t size() const noexcept { return events.size(); }
  bool empty() const noexcept { return events.empty(); }
  bool fully_scored() const {
    return std::all_of(events.begin(), events.end(), [](const Event& e) { return e.toxicity.has_value(); });
  }

  friend bool operator==(const Timeline&, const Timeline&) = default;
};

struct Corpus {
  std::map<std::string, Timeline> timelines;
  std::optional<std::size_t> required_length;

  std::size_t event_count() const {
    std::size_t n = 0;
    for (const auto& [_, t] : timelines) n += t.size();
    return n;
  }

  friend bool operator==(const Corpus&, const Corpus&) = default;
};

enum class InputFormat { jsonl, csv };
enum class OnBadRecord { fail, skip_and_log };

struct IngestOptions {
  OnBadRecord on_bad_record = OnBadRecord::fail;
  EpochSeconds timestamp_floor = kDefaultTimestampFloor;
  // Worker threads for parsing; does not affect the result.
  std::size_t parallelism = 1;
};

inline InputFormat parse_input_format(const std::string& name) {
  if (name == "jsonl") return InputFormat::jsonl;
  if (name == "csv") return InputFormat::csv;
  throw ConfigError("unknown input format '" + name + "' (expected jsonl or csv)");
}

// Guess from the extension; anything that is not .csv is read as JSONL.
inline InputFormat format_from_path(const std::filesystem::path& p) {
  return p.extension() == ".csv" ? InputFormat::csv : InputFormat::jsonl;
}

inline bool event_order(const Event& a, const Event& b) {
  if (a.timestamp != b.timestamp) return a.timestamp < b.timestamp;
  return a.event_id < b.event_id;
}

// Checks the Timeline invariants; used after deserialization and by tests.
inline void validate_timeline(const Timeline& t) {
  for (std::size_t i = 0; i < t.events.size(); ++i) {
    const Event& e = t.events[i];
    if (e.toxicity && !(*e.toxicity >= 0.0 && *e.toxicity <= 1.0))
      throw ValidationError(t.user_id, "toxicity out of [0,1] on event '" + e.event_id + "'");
    if (i > 0 && !event_order(t.events[i - 1], e))
      throw ValidationError(t.user_id, "events not strictly ordered by (timestamp, event_id) at index " +
                                           std::to_string(i));
  }
  // ordering by (timestamp, event_id) alone does not rule out an id reused
  // at two different timestamps
  std::vector<const std::string*> ids;
  ids.reserve(t.events.size());
  for (const auto& e : t.events) ids.push_back(&e.event_id);
  std::sort(ids.begin(), ids.end(), [](auto* a, auto* b) { return *a < *b; });
  for (std::size_t i = 1; i < ids.size(); ++i)
    if (*ids[i] == *ids[i - 1]) throw ValidationError(t.user_id, "duplicate event_id '" + *ids[i] + "'");
}

namespace detail {

struct RawRecord {
  std::string user_id;
  Event event;
};

class CorpusBuilder {
 public:
  explicit CorpusBuilder(const IngestOptions& opts) : opts_(opts) {}

  void add(RawRecord rec) { pending_[rec.user_id].push_back(std::move(rec.event)); }

  // Reports a rejected record according to on_bad_record.
  void reject(const std::string& source, std::size_t line, const std::string& user_id, const std::string& reason,
              bool structural) {
    if (opts_.on_bad_record == OnBadRecord::fail) {
      if (structural) throw FormatError(line, reason);
      throw ValidationError(user_id, reason + " (" + source + ":" + std::to_string(line) + ")");
    }
    ++skipped_;
    log::warn("ingest", "skipped bad record",
              {{"source", source}, {"line", line}, {"user_id", user_id}, {"reason", reason}});
  }

  const IngestOptions& options() const { return opts_; }

  Corpus finish() {
    Corpus corpus;
    std::size_t duplicates = 0;
    for (auto& [user, events] : pending_) {
      // Stable sort keeps arrival order among equal ids, so unique() retains
      // the first occurrence.
      std::stable_sort(events.begin(), events.end(),
                       [](const Event& a, const Event& b) { return a.event_id < b.event_id; });
      auto last = std::unique(events.begin(), events.end(),
                              [](const Event& a, const Event& b) { return a.event_id == b.event_id; });
      const auto dropped = static_cast<std::size_t>(std::distance(last, events.end()));
      if (dropped) {
        duplicates += dropped;
        log::warn("ingest", "dropped duplicate event ids", {{"user_id", user}, {"count", dropped}});
      }
      events.erase(last, events.end());
      std::sort(events.begin(), events.end(), event_order);
      Timeline tl{user, std::move(events)};
      corpus.timelines.emplace(user, std::move(tl));
    }
    pending_.clear();
    log::info("ingest", "corpus built",
              {{"users", corpus.timelines.size()}, {"skipped", skipped_}, {"duplicates", duplicates}});
    return corpus;
  }

 private:
  IngestOptions opts_;
  std::map<std::string, std::vector<Event>> pending_;
  std::size_t skipped_ = 0;
};

// Shared semantic checks for a parsed record. Returns the failure reason or
// an empty string.
inline std::string check_record(const RawRecord& rec, const IngestOptions& opts) {
  if (rec.user_id.empty()) return "empty user_id";
  if (rec.event.event_id.empty()) return "empty event_id";
  if (rec.event.timestamp < opts.timestamp_floor)
    return "timestamp " + format_rfc3339(rec.event.timestamp) + " is before the accepted floor " +
           format_rfc3339(opts.timestamp_floor);
  if (rec.event.toxicity) {
    const double v = *rec.event.toxicity;
    if (!(v >= 0.0 && v <= 1.0)) return "toxicity " + fmt::shortest(v) + " outside [0,1]";
  }
  return {};
}

// Outcome of parsing one JSONL line: a record, a rejection, or nothing
// (blank line).
struct ParsedLine {
  std::optional<RawRecord> record;
  std::string user_id;
  std::string reason;
  bool structural = false;
};

inline ParsedLine parse_jsonl_line(std::string_view line, const IngestOptions& opts) {
  ParsedLine out;
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  if (line.find_first_not_of(" \t") == std::string_view::npos) return out;
  auto reject = [&](std::string reason, bool structural) {
    out.reason = std::move(reason);
    out.structural = structural;
    return out;
  };

  nlohmann::json obj;
  try {
    obj = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    return reject(std::string("invalid JSON: ") + e.what(), true);
  }
  if (!obj.is_object()) return reject("record is not a JSON object", true);

  RawRecord rec;
  auto uid = obj.find("user_id");
  auto eid = obj.find("event_id");
  auto ts = obj.find("timestamp");
  if (uid == obj.end() || !uid->is_string()) return reject("missing or non-string user_id", true);
  rec.user_id = uid->get<std::string>();
  out.user_id = rec.user_id;
  if (eid == obj.end() || !eid->is_string()) return reject("missing or non-string event_id", true);
  rec.event.event_id = eid->get<std::string>();

  std::optional<EpochSeconds> parsed_ts;
  if (ts != obj.end()) {
    if (ts->is_number_integer())
      parsed_ts = ts->get<EpochSeconds>();
    else if (ts->is_string())
      parsed_ts = parse_rfc3339(ts->get_ref<const std::string&>());
  }
  if (!parsed_ts) return reject("missing or unparsable timestamp", false);
  rec.event.timestamp = *parsed_ts;

  if (auto it = obj.find("text"); it != obj.end() && !it->is_null()) {
    if (!it->is_string()) return reject("text is not a string", true);
    rec.event.text = std::move(it->get_ref<std::string&>());
  }
  if (auto it = obj.find("toxicity"); it != obj.end() && !it->is_null()) {
    if (!it->is_number()) return reject("toxicity is not a number", true);
    rec.event.toxicity = it->get<double>();
  }

  if (auto reason = check_record(rec, opts); !reason.empty()) return reject(std::move(reason), false);
  out.record = std::move(rec);
  return out;
}

// Lines are parsed in chunks by `opts.parallelism` workers and handed to the
// builder in file order, so results and error reporting match a serial read.
inline void ingest_jsonl(std::istream& in, const std::string& source, CorpusBuilder& builder) {
  const std::size_t workers = std::max<std::size_t>(1, builder.options().parallelism);
  const std::size_t chunk = 4096 * workers;
  std::vector<std::string> lines;
  std::vector<ParsedLine> parsed;
  std::size_t lineno = 0;
  bool more = true;
  while (more) {
    lines.clear();
    std::string line;
    while (lines.size() < chunk && (more = static_cast<bool>(std::getline(in, line)))) lines.push_back(std::move(line));
    parsed.assign(lines.size(), ParsedLine{});
    parallel_for(lines.size(), workers,
                 [&](std::size_t i) { parsed[i] = parse_jsonl_line(lines[i], builder.options()); });
    for (auto& p : parsed) {
      ++lineno;
      if (p.record)
        builder.add(std::move(*p.record));
      else if (!p.reason.empty())
        builder.reject(source, lineno, p.user_id, p.reason, p.structural);
    }
  }
}

inline void ingest_csv(std::istream& in, const std::string& source, CorpusBuilder& builder) {
  csv::Reader reader(in);
  std::vector<std::string> fields;
  if (!reader.next(fields)) return;
  static const std::vector<std::string> kHeader = {"user_id", "event_id", "timestamp", "text", "toxicity"};
  if (!fields.empty() && fields[0].rfind("\xEF\xBB\xBF", 0) == 0) fields[0].erase(0, 3);
  if (fields != kHeader) throw FormatError(1, "expected header user_id,event_id,timestamp,text,toxicity");

  // Quoting errors throw straight out of the reader: after one the record
  // boundaries are unknown, so they are never skipped.
  while (reader.next(fields)) {
    const std::size_t lineno = reader.record_line();
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != kHeader.size()) {
      builder.reject(source, lineno, fields.empty() ? "" : fields[0],
                     "expected 5 fields, got " + std::to_string(fields.size()), true);
      continue;
    }
    RawRecord rec;
    rec.user_id = fields[0];
    rec.event.event_id = fields[1];
    auto ts = parse_timestamp(fields[2]);
    if (!ts) {
      builder.reject(source, lineno, rec.user_id, "unparsable timestamp '" + fields[2] + "'", false);
      continue;
    }
    rec.event.timestamp = *ts;
    if (!fields[3].empty()) {
      if (!fmt::valid_utf8(fields[3])) {
        builder.reject(source, lineno, rec.user_id, "text is not valid UTF-8", true);
        continue;
      }
      rec.event.text = std::move(fields[3]);
    }
    if (!fields[4].empty()) {
      double v = 0;
      const char* b = fields[4].data();
      const char* e = b + fields[4].size();
      auto [ptr, ec] = std::from_chars(b, e, v);
      if (ec != std::errc{} || ptr != e) {
        builder.reject(source, lineno, rec.user_id, "toxicity '" + fields[4] + "' is not a number", true);
        continue;
      }
      rec.event.toxicity = v;
    }
    if (auto reason = check_record(rec, builder.options()); !reason.empty()) {
      builder.reject(source, lineno, rec.user_id, reason, false);
      continue;
    }
    builder.add(std::move(rec));
  }
}

inline void ingest_into(const std::filesystem::path& path, InputFormat format, CorpusBuilder& builder) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  if (format == InputFormat::jsonl)
    ingest_jsonl(in, path.string(), builder);
  else
    ingest_csv(in, path.string(), builder);
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
}

}  // namespace detail

inline Corpus ingest(std::istream& in, InputFormat format, const IngestOptions& opts = {},
                     const std::string& source = "<stream>") {
  detail::CorpusBuilder builder(opts);
  if (format == InputFormat::jsonl)
    detail::ingest_jsonl(in, source, builder);
  else
    detail::ingest_csv(in, source, builder);
  return builder.finish();
}

inline Corpus ingest(const std::filesystem::path& path, InputFormat format, const IngestOptions& opts = {}) {
  detail::CorpusBuilder builder(opts);
  detail::ingest_into(path, format, builder);
  return builder.finish();
}

// Merged ingest: a user split across files becomes one timeline, and an
// event id seen twice keeps the occurrence from the earliest file.
inline Corpus ingest(const std::vector<std::filesystem::path>& paths, InputFormat format,
                     const IngestOptions& opts = {}) {
  detail::CorpusBuilder builder(opts);
  for (const auto& p : paths) detail::ingest_into(p, format, builder);
  return builder.finish();
}

inline Corpus filter_by_length(const Corpus& corpus, std::size_t n) {
  if (n == 0) throw ConfigError("filter_by_length requires n >= 1");
  Corpus out;
  out.required_length = n;
  for (const auto& [user, tl] : corpus.timelines)
    if (tl.size() == n) out.timelines.emplace(user, tl);
  return out;
}

inline Corpus filter_by_length(Corpus&& corpus, std::size_t n) {
  if (n == 0) throw ConfigError("filter_by_length requires n >= 1");
  std::erase_if(corpus.timelines, [n](const auto& kv) { return kv.second.size() != n; });
  corpus.required_length = n;
  return std::move(corpus);
}

// Gaps in seconds between consecutive events; k events give k-1 gaps.
inline std::vector<double> inter_event_times(const Timeline& t) {
  if (t.size() < 2)
    throw TooFewEvents("user '" + t.user_id + "' has " + std::to_string(t.size()) +
                       " event(s); inter-event times need at least 2");
  std::vector<double> gaps;
  gaps.reserve(t.size() - 1);
  for (std::size_t i = 1; i < t.size(); ++i)
    gaps.push_back(static_cast<double>(t.events[i].timestamp - t.events[i - 1].timestamp));
  return gaps;
}

inline void write_event_jsonl(std::ostream& out, const std::string& user_id, const Event& e) {
  std::string line;
  line.reserve(96 + (e.text ? e.text->size() : 0));
  line += "{\"user_id\":";
  line += fmt::json_escape(user_id);
  line += ",\"event_id\":";
  line += fmt::json_escape(e.event_id);
  line += ",\"timestamp\":\"";
  line += format_rfc3339(e.timestamp);
  line += '"';
  if (e.text) {
    line += ",\"text\":";
    line += fmt::json_escape(*e.text);
  }
  if (e.toxicity) {
    line += ",\"toxicity\":";
    line += fmt::shortest(*e.toxicity);
  }
  line += "}\n";
  out << line;
}

// Canonical serialization: JSONL ordered by (user_id, timestamp, event_id).
inline void export_jsonl(const Corpus& corpus, std::ostream& out) {
  for (const auto& [user, tl] : corpus.timelines)
    for (const auto& e : tl.events) write_event_jsonl(out, user, e);
}

inline std::string export_jsonl(const Corpus& corpus) {
  std::ostringstream os;
  export_jsonl(corpus, os);
  return os.str();
}

}  // namespace ctu
