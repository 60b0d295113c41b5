#pragma once

// Per-user scalar metrics: mean toxicity, Gini index of toxicity scores,
// inter-event burstiness (overall and per toxicity class), activity span.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/format.hpp"
#include "ctu/parallel.hpp"
#include "ctu/timeline.hpp"

namespace ctu {

struct UserMetrics {
  std::string user_id;
  std::size_t event_count = 0;
  // Undefined when the timeline is not fully scored.
  std::optional<double> mean_toxicity;
  std::optional<double> gini;
  std::optional<double> burstiness_all;
  std::optional<double> burstiness_toxic;
  std::optional<double> burstiness_benign;
  int span_years = 1;
  double tweets_per_year = 0.0;

  bool classifiable() const noexcept { return mean_toxicity.has_value() && gini.has_value(); }

  friend bool operator==(const UserMetrics&, const UserMetrics&) = default;
};

struct ActivitySpan {
  int span_years = 1;
  double tweets_per_year = 0.0;
};

struct SplitBurstiness {
  std::optional<double> toxic;
  std::optional<double> benign;
};

namespace detail {

// Neumaier-compensated sum.
inline double compensated_sum(std::span<const double> xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double t = sum + x;
    if (std::abs(sum) >= std::abs(x))
      c += (sum - t) + x;
    else
      c += (x - t) + sum;
    sum = t;
  }
  return sum + c;
}

inline bool all_equal(std::span<const double> xs) {
  return std::adjacent_find(xs.begin(), xs.end(), std::not_equal_to<>()) == xs.end();
}

inline std::vector<double> scores_of(const Timeline& t) {
  std::vector<double> out;
  out.reserve(t.size());
  for (const auto& e : t.events) {
    if (!e.toxicity) throw UnscoredEvent(t.user_id, e.event_id);
    out.push_back(*e.toxicity);
  }
  return out;
}

// Mean that returns the common value exactly when every input is equal, so
// strict comparisons against it behave.
inline double exact_mean(std::span<const double> xs) {
  if (all_equal(xs)) return xs.front();
  return compensated_sum(xs) / static_cast<double>(xs.size());
}

}  // namespace detail

inline double mean_toxicity(const Timeline& t) {
  if (t.empty()) throw EmptyInput("user '" + t.user_id + "' has no events");
  const auto scores = detail::scores_of(t);
  return detail::exact_mean(scores);
}

// Gini index, population form: sum_i sum_j |x_i - x_j| / (2 n^2 mean),
// evaluated as sum_i (2i - n - 1) x_(i) / (n sum x) over the ascending sort.
// An all-zero input returns 0.
inline double gini(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("gini of an empty sequence");
  std::vector<double> x(values.begin(), values.end());
  for (double v : x)
    if (!(v >= 0.0)) throw Error("gini requires non-negative values, got " + fmt::shortest(v));
  std::sort(x.begin(), x.end());
  if (x.front() == x.back()) return 0.0;

  const auto n = static_cast<long double>(x.size());
  long double weighted = 0.0L, total = 0.0L;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double rank = static_cast<long double>(i + 1);
    weighted += (2.0L * rank - n - 1.0L) * x[i];
    total += x[i];
  }
  const auto g = static_cast<double>(weighted / (n * total));
  return std::clamp(g, 0.0, 1.0);
}

// B = (sigma - mu) / (sigma + mu) with population sigma. Returns nullopt
// when every gap is zero (B undefined).
inline std::optional<double> burstiness(std::span<const double> gaps) {
  if (gaps.size() < 2)
    throw TooFewIntervals("burstiness needs at least 2 inter-event times, got " + std::to_string(gaps.size()));
  for (double g : gaps)
    if (!(g >= 0.0)) throw Error("inter-event times must be non-negative, got " + fmt::shortest(g));
  if (detail::all_equal(gaps)) {
    if (gaps.front() == 0.0) return std::nullopt;
    return -1.0;
  }
  const double mu = detail::compensated_sum(gaps) / static_cast<double>(gaps.size());
  long double ss = 0.0L;
  for (double g : gaps) {
    const long double d = static_cast<long double>(g) - mu;
    ss += d * d;
  }
  const double sigma = static_cast<double>(std::sqrt(ss / static_cast<long double>(gaps.size())));
  return (sigma - mu) / (sigma + mu);
}

inline std::optional<double> burstiness(const Timeline& t) {
  const auto gaps = inter_event_times(t);
  return burstiness(gaps);
}

// Splits a scored timeline at its mean toxicity (strictly above: toxic,
// otherwise benign) and measures burstiness within each class's own
// subsequence. A class with fewer than two gaps is undefined.
inline SplitBurstiness split_burstiness(const Timeline& t) {
  if (t.size() < 2) throw TooFewEvents("user '" + t.user_id + "' needs at least 2 events for split burstiness");
  const auto scores = detail::scores_of(t);
  const double mean = detail::exact_mean(scores);

  std::vector<EpochSeconds> toxic, benign;
  for (std::size_t i = 0; i < t.size(); ++i) (scores[i] > mean ? toxic : benign).push_back(t.events[i].timestamp);

  auto class_b = [](const std::vector<EpochSeconds>& ts) -> std::optional<double> {
    // burstiness needs two gaps, so a class needs three events
    if (ts.size() < 3) return std::nullopt;
    std::vector<double> gaps;
    gaps.reserve(ts.size() - 1);
    for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(static_cast<double>(ts[i] - ts[i - 1]));
    return burstiness(gaps);
  };
  return {class_b(toxic), class_b(benign)};
}

inline int span_years_for(EpochSeconds duration) {
  if (duration <= 0) return 1;
  const auto years = (duration + kSecondsPerJulianYear - 1) / kSecondsPerJulianYear;
  return static_cast<int>(std::max<EpochSeconds>(1, years));
}

inline ActivitySpan activity_span(const Timeline& t) {
  if (t.empty()) throw EmptyInput("user '" + t.user_id + "' has no events");
  const EpochSeconds duration = t.events.back().timestamp - t.events.front().timestamp;
  ActivitySpan s;
  s.span_years = span_years_for(duration);
  s.tweets_per_year = static_cast<double>(t.size()) / s.span_years;
  return s;
}

inline UserMetrics compute_user_metrics(const Timeline& t) {
  if (t.empty()) throw EmptyInput("user '" + t.user_id + "' has no events");
  UserMetrics m;
  m.user_id = t.user_id;
  m.event_count = t.size();
  const auto span = activity_span(t);
  m.span_years = span.span_years;
  m.tweets_per_year = span.tweets_per_year;
  if (t.size() >= 3) m.burstiness_all = burstiness(t);
  if (t.fully_scored()) {
    const auto scores = detail::scores_of(t);
    m.mean_toxicity = detail::exact_mean(scores);
    m.gini = gini(scores);
    if (t.size() >= 2) {
      const auto split = split_burstiness(t);
      m.burstiness_toxic = split.toxic;
      m.burstiness_benign = split.benign;
    }
  }
  return m;
}

// Metrics for every timeline, ordered by user_id.
inline std::vector<UserMetrics> compute_metrics(const Corpus& corpus, std::size_t parallelism = 1) {
  std::vector<const Timeline*> timelines;
  timelines.reserve(corpus.timelines.size());
  for (const auto& [_, t] : corpus.timelines) timelines.push_back(&t);
  std::vector<UserMetrics> out(timelines.size());
  parallel_for(timelines.size(), parallelism, [&](std::size_t i) { out[i] = compute_user_metrics(*timelines[i]); });
  return out;
}

inline const std::vector<std::string>& metrics_csv_header() {
  static const std::vector<std::string> h = {"user_id",           "event_count",      "mean_toxicity",
                                             "gini",              "burstiness_all",   "burstiness_toxic",
                                             "burstiness_benign", "span_years",       "tweets_per_year"};
  return h;
}

inline void write_metrics_csv(const std::vector<UserMetrics>& rows, std::ostream& out) {
  csv::write_row(out, metrics_csv_header());
  for (const auto& m : rows) {
    csv::write_row(out, {m.user_id, std::to_string(m.event_count), fmt::shortest(m.mean_toxicity),
                         fmt::shortest(m.gini), fmt::shortest(m.burstiness_all), fmt::shortest(m.burstiness_toxic),
                         fmt::shortest(m.burstiness_benign), std::to_string(m.span_years),
                         fmt::shortest(m.tweets_per_year)});
  }
}

inline std::vector<UserMetrics> read_metrics_csv(std::istream& in) {
  csv::Reader reader(in);
  std::vector<std::string> f;
  if (!reader.next(f) || f != metrics_csv_header()) throw FormatError(1, "unexpected metrics CSV header");

  auto num = [&](const std::string& s, std::size_t line) -> std::optional<double> {
    if (s.empty()) return std::nullopt;
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size()) throw FormatError(line, "not a number: '" + s + "'");
    return v;
  };

  std::vector<UserMetrics> rows;
  while (reader.next(f)) {
    const auto line = reader.record_line();
    if (f.size() == 1 && f[0].empty()) continue;
    if (f.size() != metrics_csv_header().size()) throw FormatError(line, "wrong field count");
    UserMetrics m;
    m.user_id = f[0];
    const auto count = num(f[1], line);
    const auto span = num(f[7], line);
    const auto tpy = num(f[8], line);
    if (!count || !span || !tpy) throw FormatError(line, "event_count, span_years and tweets_per_year are required");
    m.event_count = static_cast<std::size_t>(*count);
    m.mean_toxicity = num(f[2], line);
    m.gini = num(f[3], line);
    m.burstiness_all = num(f[4], line);
    m.burstiness_toxic = num(f[5], line);
    m.burstiness_benign = num(f[6], line);
    m.span_years = static_cast<int>(*span);
    m.tweets_per_year = *tpy;
    rows.push_back(std::move(m));
  }
  return rows;
}

}  // namespace ctu
