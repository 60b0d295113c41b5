#include <gtest/gtest.h>

#include "ctu/churn.hpp"
#include "ctu/metrics.hpp"
#include "ctu/scoring.hpp"
#include "ctu/synthgen.hpp"

using namespace ctu;

TEST(Synth, PeriodicIsExactlyRegular) {
  synth::GenSpec spec;
  spec.n_users = 3;
  spec.events_per_user = 100;
  spec.process = synth::Periodic{60};
  for (const auto& [id, t] : synth::generate(spec).timelines) {
    EXPECT_EQ(t.size(), 100u);
    EXPECT_EQ(burstiness(t), -1.0);
    EXPECT_NO_THROW(validate_timeline(t));
  }
}

TEST(Synth, ConstantToxicityHasZeroGini) {
  synth::GenSpec spec;
  spec.n_users = 2;
  spec.toxicity_model = synth::ConstantToxicity{0.5};
  for (const auto& [id, t] : synth::generate(spec).timelines) {
    const auto m = compute_user_metrics(t);
    EXPECT_EQ(m.gini, 0.0);
    EXPECT_EQ(m.mean_toxicity, 0.5);
  }
}

TEST(Synth, ChurnTemplateRoundTrip) {
  synth::GenSpec spec;
  spec.seed = 12;
  spec.n_users = 20;
  spec.events_per_user = 3200;
  spec.process = synth::Poisson{1.0 / 3600.0};
  spec.churn_template = synth::ChurnTemplate{3, 2};
  spec.emit_text = false;
  for (const auto& [id, t] : synth::generate(spec).timelines) {
    const auto d = decompose(t);
    ASSERT_GE(d.lives.size(), 2u) << id;
    for (const auto& l : d.lives) EXPECT_EQ(l.length_weeks, 3u) << id;
    for (auto w : d.deaths) EXPECT_EQ(w, 2u) << id;
  }
}

TEST(Synth, ChurnTemplateHoldsForSparseAndHeavyTailedGaps) {
  const std::vector<synth::Process> processes{synth::Pareto{0.8, 600}, synth::Poisson{1.0 / (10 * 86400.0)},
                                              synth::Periodic{20 * 86400.0}};
  for (const auto& process : processes)
    for (std::size_t events : {5u, 40u, 300u}) {
      synth::GenSpec spec;
      spec.seed = events;
      spec.n_users = 10;
      spec.events_per_user = events;
      spec.process = process;
      spec.churn_template = synth::ChurnTemplate{4, 1};
      spec.emit_text = false;
      for (const auto& [id, t] : synth::generate(spec).timelines) {
        const auto d = decompose(t);
        for (const auto& l : d.lives) EXPECT_EQ(l.length_weeks, 4u) << id << " n=" << events;
        for (auto w : d.deaths) EXPECT_EQ(w, 1u) << id << " n=" << events;
      }
    }
  synth::GenSpec too_short;
  too_short.events_per_user = 2;
  too_short.churn_template = synth::ChurnTemplate{3, 1};
  EXPECT_THROW(synth::generate(too_short), InvalidSpec);
}

TEST(Synth, DeterministicAndOrderIndependent) {
  synth::GenSpec spec;
  spec.seed = 2024;
  spec.n_users = 30;
  spec.events_per_user = 50;
  spec.process = synth::Pareto{1.5, 60};
  spec.toxicity_model = synth::TwoClassToxicity{0.3, 0.9, 0.05};
  spec.start_spread_days = 365;
  const auto a = synth::generate(spec, 1);
  EXPECT_EQ(a, synth::generate(spec, 8));
  EXPECT_EQ(a.timelines.at("u0007"), synth::generate_user(spec, 7));
  spec.seed = 2025;
  EXPECT_NE(a, synth::generate(spec));
}

TEST(Synth, TextScoresMatchToxicity) {
  synth::GenSpec spec;
  spec.n_users = 2;
  spec.events_per_user = 40;
  spec.toxicity_model = synth::TwoClassToxicity{0.5, 0.85, 0.1};
  const auto lex = default_lexicon();
  for (const auto& [id, t] : synth::generate(spec).timelines)
    for (const auto& e : t.events) {
      EXPECT_EQ(offline_score(*e.text, lex), *e.toxicity) << *e.text;
    }
}

TEST(Synth, SpecValidationAndJson) {
  synth::GenSpec bad;
  bad.process = synth::Pareto{0.0, 1.0};
  EXPECT_THROW(synth::generate(bad), InvalidSpec);
  bad = {};
  bad.toxicity_model = synth::TwoClassToxicity{1.2, 0.5, 0.5};
  EXPECT_THROW(synth::generate(bad), InvalidSpec);

  const auto spec = synth::spec_from_json(nlohmann::json::parse(R"({
    "seed": 7, "n_users": 4, "events_per_user": 10,
    "process": {"type": "poisson", "rate": 0.001},
    "toxicity_model": {"type": "two_class", "p_toxic": 0.2, "v_toxic": 0.9, "v_benign": 0.05},
    "churn_template": {"life_weeks": 2, "death_weeks": 1},
    "start": "2015-03-01T00:00:00Z"
  })"));
  EXPECT_EQ(spec.seed, 7u);
  EXPECT_EQ(spec.churn_template->life_weeks, 2u);
  EXPECT_EQ(spec.start, epoch_from_civil(2015, 3, 1));
  EXPECT_THROW(synth::spec_from_json(nlohmann::json::parse(R"({"seed":1})")), InvalidSpec);
  EXPECT_THROW(synth::spec_from_json(nlohmann::json::parse(
                   R"({"seed":1,"n_users":1,"events_per_user":1,"process":{"type":"weird"},"toxicity_model":{"type":"constant","v":0}})")),
               InvalidSpec);
}
