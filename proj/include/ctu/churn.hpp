#pragma once

// Alternating-renewal decomposition of a timeline. Time is cut into 7-day
// windows anchored at the user's first event; maximal runs of active weeks
// are lives, runs of silent weeks between two lives are deaths. Silence
// before the first or after the last active week never counts.

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/format.hpp"
#include "ctu/log.hpp"
#include "ctu/parallel.hpp"
#include "ctu/timeline.hpp"

namespace ctu {

struct LifePeriod {
  std::size_t start_week = 0;
  std::size_t length_weeks = 0;
  std::size_t tweet_count = 0;
  double toxicity_sum = 0.0;

  friend bool operator==(const LifePeriod&, const LifePeriod&) = default;
};

struct ChurnDecomposition {
  std::string user_id;
  std::vector<bool> week_activity;
  std::vector<LifePeriod> lives;
  std::vector<std::size_t> deaths;
  double avg_life_weeks = 0.0;
  std::optional<double> avg_death_weeks;
  std::size_t cycle_count = 0;
};

// One row of the cohort churn table.
struct ChurnSummary {
  std::string user_id;
  double avg_life_weeks = 0.0;
  std::optional<double> avg_death_weeks;
  std::size_t cycles = 0;
  double mean_tweets_per_life = 0.0;
  double mean_toxicity_per_life = 0.0;

  friend bool operator==(const ChurnSummary&, const ChurnSummary&) = default;
};

inline std::size_t week_index(EpochSeconds anchor, EpochSeconds t) {
  return static_cast<std::size_t>((t - anchor) / kSecondsPerWeek);
}

inline std::vector<bool> weekly_indicator(const Timeline& t) {
  if (t.empty()) throw EmptyInput("user '" + t.user_id + "' has no events");
  const EpochSeconds anchor = t.events.front().timestamp;
  std::vector<bool> weeks(week_index(anchor, t.events.back().timestamp) + 1, false);
  for (const auto& e : t.events) weeks[week_index(anchor, e.timestamp)] = true;
  return weeks;
}

inline ChurnDecomposition decompose(const Timeline& t) {
  if (t.empty()) throw EmptyInput("user '" + t.user_id + "' has no events");
  for (const auto& e : t.events)
    if (!e.toxicity) throw UnscoredEvent(t.user_id, e.event_id);

  ChurnDecomposition d;
  d.user_id = t.user_id;
  d.week_activity = weekly_indicator(t);

  const EpochSeconds anchor = t.events.front().timestamp;
  std::size_t last_week = 0;
  for (const auto& e : t.events) {
    const std::size_t w = week_index(anchor, e.timestamp);
    if (d.lives.empty()) {
      d.lives.push_back({w, 1, 0, 0.0});
    } else if (w > last_week + 1) {
      d.deaths.push_back(w - last_week - 1);
      d.lives.push_back({w, 1, 0, 0.0});
    }
    LifePeriod& life = d.lives.back();
    life.length_weeks = w - life.start_week + 1;
    life.tweet_count += 1;
    life.toxicity_sum += *e.toxicity;
    last_week = w;
  }

  d.cycle_count = d.lives.size();
  double life_total = 0.0;
  for (const auto& l : d.lives) life_total += static_cast<double>(l.length_weeks);
  d.avg_life_weeks = life_total / static_cast<double>(d.lives.size());
  if (!d.deaths.empty()) {
    double death_total = 0.0;
    for (auto w : d.deaths) death_total += static_cast<double>(w);
    d.avg_death_weeks = death_total / static_cast<double>(d.deaths.size());
  }
  return d;
}

// Expands lives and deaths back into the week indicator.
inline std::vector<bool> reconstruct_indicator(const ChurnDecomposition& d) {
  std::vector<bool> weeks;
  for (std::size_t c = 0; c < d.lives.size(); ++c) {
    weeks.insert(weeks.end(), d.lives[c].length_weeks, true);
    if (c < d.deaths.size()) weeks.insert(weeks.end(), d.deaths[c], false);
  }
  return weeks;
}

inline ChurnSummary summarize(const ChurnDecomposition& d) {
  ChurnSummary s;
  s.user_id = d.user_id;
  s.avg_life_weeks = d.avg_life_weeks;
  s.avg_death_weeks = d.avg_death_weeks;
  s.cycles = d.cycle_count;
  double tweets = 0.0, tox = 0.0;
  for (const auto& l : d.lives) {
    tweets += static_cast<double>(l.tweet_count);
    tox += l.toxicity_sum;
  }
  s.mean_tweets_per_life = tweets / static_cast<double>(d.lives.size());
  s.mean_toxicity_per_life = tox / static_cast<double>(d.lives.size());
  return s;
}

// Per-user churn summaries ordered by user_id. Users that cannot be
// decomposed (unscored events) are logged and left out.
inline std::vector<ChurnSummary> cohort_churn(const Corpus& corpus, std::size_t parallelism = 1) {
  std::vector<const Timeline*> timelines;
  timelines.reserve(corpus.timelines.size());
  for (const auto& [_, t] : corpus.timelines) timelines.push_back(&t);

  std::vector<std::optional<ChurnSummary>> slots(timelines.size());
  parallel_for(timelines.size(), parallelism, [&](std::size_t i) {
    try {
      slots[i] = summarize(decompose(*timelines[i]));
    } catch (const Error& e) {
      log::warn("churn", "user skipped", {{"user_id", timelines[i]->user_id}, {"reason", e.what()}});
    }
  });

  std::vector<ChurnSummary> out;
  out.reserve(slots.size());
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  return out;
}

inline void write_churn_csv(const std::vector<ChurnSummary>& rows, std::ostream& out) {
  csv::write_row(out, {"user_id", "avg_life_weeks", "avg_death_weeks", "cycles", "mean_tweets_per_life",
                       "mean_toxicity_per_life"});
  for (const auto& r : rows)
    csv::write_row(out, {r.user_id, fmt::shortest(r.avg_life_weeks), fmt::shortest(r.avg_death_weeks),
                         std::to_string(r.cycles), fmt::shortest(r.mean_tweets_per_life),
                         fmt::shortest(r.mean_toxicity_per_life)});
}

}  // namespace ctu
