#pragma once

// Seeded synthetic corpora with known structure: periodic, Poisson or
// Pareto inter-event gaps, constant or two-class toxicity, and an optional
// life/death week template. Used as the ground truth for metric tests.
//
// Reproducibility: each user draws from its own std::mt19937_64 seeded with
// splitmix64(seed ^ splitmix64(user_index)). The engine's output sequence is
// fixed by the standard and all variates are produced by explicit inverse
// transforms, so corpora are identical across platforms and independent of
// the order users are generated in.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "ctu/error.hpp"
#include "ctu/lexicon.hpp"
#include "ctu/parallel.hpp"
#include "ctu/timeline.hpp"

namespace ctu::synth {

struct Periodic {
  double interval = 60.0;  // seconds
};
struct Poisson {
  double rate = 1.0 / 3600.0;  // events per second
};
struct Pareto {
  double alpha = 1.5;
  double x_min = 60.0;  // seconds
};
using Process = std::variant<Periodic, Poisson, Pareto>;

struct ConstantToxicity {
  double v = 0.0;
};
struct TwoClassToxicity {
  double p_toxic = 0.1;
  double v_toxic = 0.9;
  double v_benign = 0.05;
};
using ToxicityModel = std::variant<ConstantToxicity, TwoClassToxicity>;

struct ChurnTemplate {
  std::size_t life_weeks = 1;
  std::size_t death_weeks = 1;
};

struct GenSpec {
  std::uint64_t seed = 0;
  std::size_t n_users = 1;
  std::size_t events_per_user = 100;
  Process process = Poisson{};
  ToxicityModel toxicity_model = ConstantToxicity{};
  std::optional<ChurnTemplate> churn_template;

  EpochSeconds start = epoch_from_civil(2012, 1, 1);
  double start_spread_days = 0.0;
  bool emit_toxicity = true;
  bool emit_text = true;
  std::string user_prefix = "u";
  // Tokens per generated text; toxicity v becomes round(v * n) flagged tokens.
  std::size_t text_tokens = 20;
};

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t user_seed(std::uint64_t seed, std::size_t user_index) {
  return splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(user_index)));
}

// Uniform in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline void validate(const GenSpec& spec) {
  auto bad = [](const std::string& why) { throw InvalidSpec(why); };
  if (spec.n_users == 0) bad("n_users must be positive");
  if (spec.events_per_user == 0) bad("events_per_user must be positive");
  std::visit(
      [&](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Periodic>) {
          if (!(p.interval > 0)) bad("periodic interval must be positive");
        } else if constexpr (std::is_same_v<P, Poisson>) {
          if (!(p.rate > 0)) bad("poisson rate must be positive");
        } else {
          if (!(p.alpha > 0)) bad("pareto alpha must be positive");
          if (!(p.x_min > 0)) bad("pareto x_min must be positive");
        }
      },
      spec.process);
  std::visit(
      [&](const auto& m) {
        using M = std::decay_t<decltype(m)>;
        auto prob = [&](double v, const char* name) {
          if (!(v >= 0.0 && v <= 1.0)) bad(std::string(name) + " must lie in [0,1]");
        };
        if constexpr (std::is_same_v<M, ConstantToxicity>) {
          prob(m.v, "constant toxicity");
        } else {
          prob(m.p_toxic, "p_toxic");
          prob(m.v_toxic, "v_toxic");
          prob(m.v_benign, "v_benign");
        }
      },
      spec.toxicity_model);
  if (spec.churn_template && (spec.churn_template->life_weeks == 0 || spec.churn_template->death_weeks == 0))
    bad("churn template weeks must be positive");
  if (spec.churn_template && spec.events_per_user < spec.churn_template->life_weeks)
    bad("events_per_user must be at least churn_template.life_weeks");
  if (!(spec.start_spread_days >= 0)) bad("start_spread_days must be non-negative");
  if (spec.emit_text && spec.text_tokens == 0) bad("text_tokens must be positive");
}

namespace detail {

inline double draw_gap(const Process& process, std::mt19937_64& rng) {
  return std::visit(
      [&](const auto& p) -> double {
        using P = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<P, Periodic>) {
          return p.interval;
        } else if constexpr (std::is_same_v<P, Poisson>) {
          return -std::log1p(-uniform01(rng)) / p.rate;
        } else {
          return p.x_min * std::pow(1.0 - uniform01(rng), -1.0 / p.alpha);
        }
      },
      process);
}

inline double draw_toxicity(const ToxicityModel& model, std::mt19937_64& rng) {
  return std::visit(
      [&](const auto& m) -> double {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, ConstantToxicity>) {
          return m.v;
        } else {
          return uniform01(rng) < m.p_toxic ? m.v_toxic : m.v_benign;
        }
      },
      model);
}

inline std::string padded(std::size_t value, std::size_t width) {
  std::string s = std::to_string(value);
  if (s.size() < width) s.insert(0, width - s.size(), '0');
  return s;
}

inline std::size_t digits(std::size_t n) { return std::to_string(n).size(); }

// Text whose offline score is round(v * tokens) / tokens.
inline std::string make_text(double v, std::size_t tokens, std::mt19937_64& rng) {
  const auto flagged = static_cast<std::size_t>(std::llround(v * static_cast<double>(tokens)));
  std::vector<bool> is_flagged(tokens, false);
  for (std::size_t i = 0; i < flagged; ++i) is_flagged[i] = true;
  // Fisher-Yates with the portable uniform draw
  for (std::size_t i = tokens; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(i));
    std::swap(is_flagged[i - 1], is_flagged[std::min(j, i - 1)]);
  }
  std::string text;
  for (std::size_t i = 0; i < tokens; ++i) {
    if (i) text += ' ';
    if (is_flagged[i]) {
      text += kFlaggedWords[static_cast<std::size_t>(uniform01(rng) * kFlaggedWords.size())];
    } else {
      text += kFillerWords[static_cast<std::size_t>(uniform01(rng) * kFillerWords.size())];
    }
  }
  return text;
}

// Year 9999 upper bound keeps every timestamp formattable.
inline constexpr EpochSeconds kMaxTimestamp = 253'402'300'799;

}  // namespace detail

inline Timeline generate_user(const GenSpec& spec, std::size_t user_index) {
  std::mt19937_64 rng(user_seed(spec.seed, user_index));
  const std::size_t n = spec.events_per_user;

  // Offsets in "active time" (seconds since the first event).
  std::vector<double> offsets(n, 0.0);
  for (std::size_t i = 1; i < n; ++i) offsets[i] = offsets[i - 1] + detail::draw_gap(spec.process, rng);
  std::vector<double> tox(n);
  for (auto& v : tox) v = detail::draw_toxicity(spec.toxicity_model, rng);

  const auto user_start =
      spec.start + static_cast<EpochSeconds>(std::floor(uniform01(rng) * spec.start_spread_days * kSecondsPerDay));

  std::vector<EpochSeconds> stamps(n);
  if (spec.churn_template) {
    // Active time is cut into life blocks with a death block of silence
    // spliced in after each one. Every week inside a life must hold an
    // event, so the active weeks are first made gap-free (longer silences
    // collapse to one week) and then mapped monotonically onto a whole
    // number of life blocks. Each event keeps its offset within its week.
    const std::size_t life_w = spec.churn_template->life_weeks;
    const auto death_s = static_cast<EpochSeconds>(spec.churn_template->death_weeks) * kSecondsPerWeek;
    std::vector<std::size_t> week(n, 0);
    std::vector<EpochSeconds> within(n, 0);
    std::size_t prev_raw = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i] > static_cast<double>(detail::kMaxTimestamp))
        throw InvalidSpec("generated timeline runs past year 9999; reduce the gap scale or event count");
      const auto active = static_cast<EpochSeconds>(std::floor(offsets[i]));
      const auto raw = static_cast<std::size_t>(active / kSecondsPerWeek);
      within[i] = active % kSecondsPerWeek;
      if (i) week[i] = week[i - 1] + std::min<std::size_t>(1, raw - prev_raw);
      prev_raw = raw;
    }
    const std::size_t active_weeks = week.back() + 1;
    if (active_weeks >= life_w) {
      const std::size_t target = (active_weeks / life_w) * life_w;
      for (auto& w : week) w = w * target / active_weeks;
    } else {
      // too short to fill one life by itself: spread events evenly by rank
      for (std::size_t i = 0; i < n; ++i) week[i] = i * life_w / n;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto block = static_cast<EpochSeconds>(week[i] / life_w);
      stamps[i] = user_start + static_cast<EpochSeconds>(week[i]) * kSecondsPerWeek + block * death_s + within[i];
    }
    std::sort(stamps.begin(), stamps.end());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      if (offsets[i] > static_cast<double>(detail::kMaxTimestamp - user_start))
        throw InvalidSpec("generated timeline runs past year 9999; reduce the gap scale or event count");
      stamps[i] = user_start + static_cast<EpochSeconds>(std::floor(offsets[i]));
    }
  }
  if (stamps.back() > detail::kMaxTimestamp)
    throw InvalidSpec("generated timeline runs past year 9999; reduce the gap scale or event count");

  Timeline tl;
  tl.user_id = spec.user_prefix + detail::padded(user_index, std::max<std::size_t>(4, detail::digits(spec.n_users)));
  tl.events.resize(n);
  const std::size_t id_width = std::max<std::size_t>(6, detail::digits(n));
  for (std::size_t i = 0; i < n; ++i) {
    Event& e = tl.events[i];
    e.event_id = "e" + detail::padded(i, id_width);
    e.timestamp = stamps[i];
    if (spec.emit_toxicity) e.toxicity = tox[i];
    if (spec.emit_text) e.text = detail::make_text(tox[i], spec.text_tokens, rng);
  }
  // zero-second gaps after flooring are fine: padded ids keep the order
  return tl;
}

inline Corpus generate(const GenSpec& spec, std::size_t parallelism = 1) {
  validate(spec);
  std::vector<Timeline> users(spec.n_users);
  parallel_for(spec.n_users, parallelism, [&](std::size_t i) { users[i] = generate_user(spec, i); });
  Corpus corpus;
  for (auto& t : users) {
    std::string id = t.user_id;
    corpus.timelines.emplace(std::move(id), std::move(t));
  }
  return corpus;
}

// ---- JSON form of GenSpec --------------------------------------------------

inline GenSpec spec_from_json(const nlohmann::json& j) {
  GenSpec s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.n_users = j.at("n_users").get<std::size_t>();
    s.events_per_user = j.at("events_per_user").get<std::size_t>();

    const auto& p = j.at("process");
    const auto kind = p.at("type").get<std::string>();
    if (kind == "periodic")
      s.process = Periodic{p.at("interval").get<double>()};
    else if (kind == "poisson")
      s.process = Poisson{p.at("rate").get<double>()};
    else if (kind == "pareto")
      s.process = Pareto{p.at("alpha").get<double>(), p.at("x_min").get<double>()};
    else
      throw InvalidSpec("unknown process type '" + kind + "'");

    const auto& t = j.at("toxicity_model");
    const auto tkind = t.at("type").get<std::string>();
    if (tkind == "constant")
      s.toxicity_model = ConstantToxicity{t.at("v").get<double>()};
    else if (tkind == "two_class")
      s.toxicity_model =
          TwoClassToxicity{t.at("p_toxic").get<double>(), t.at("v_toxic").get<double>(), t.at("v_benign").get<double>()};
    else
      throw InvalidSpec("unknown toxicity_model type '" + tkind + "'");

    if (auto it = j.find("churn_template"); it != j.end() && !it->is_null())
      s.churn_template = ChurnTemplate{it->at("life_weeks").get<std::size_t>(), it->at("death_weeks").get<std::size_t>()};
    if (auto it = j.find("start"); it != j.end()) {
      std::optional<EpochSeconds> ts;
      if (it->is_number_integer())
        ts = it->get<EpochSeconds>();
      else if (it->is_string())
        ts = parse_rfc3339(it->get<std::string>());
      if (!ts) throw InvalidSpec("start must be RFC 3339 or epoch seconds");
      s.start = *ts;
    }
    s.start_spread_days = j.value("start_spread_days", s.start_spread_days);
    s.emit_toxicity = j.value("emit_toxicity", s.emit_toxicity);
    s.emit_text = j.value("emit_text", s.emit_text);
    s.user_prefix = j.value("user_prefix", s.user_prefix);
    s.text_tokens = j.value("text_tokens", s.text_tokens);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidSpec(std::string("bad generator spec: ") + e.what());
  }
  validate(s);
  return s;
}

}  // namespace ctu::synth
