#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ctu/report.hpp"
#include "ctu/synthgen.hpp"
#include "oracles.hpp"
#include "test_helpers.hpp"

using namespace ctu;
using testing_util::make_timeline;

namespace {

double integral(const Histogram& h) {
  double s = 0;
  for (const auto& b : h.bins) s += b.density * h.width;
  return s;
}

UserMetrics row(const std::string& id, int span, std::size_t events = 3200) {
  UserMetrics m;
  m.user_id = id;
  m.span_years = span;
  m.event_count = events;
  return m;
}

EpochSeconds at(int y, unsigned m = 6, unsigned d = 1) { return epoch_from_civil(y, m, d); }

}  // namespace

TEST(Ecdf, Examples) {
  EXPECT_EQ(ecdf(std::vector<double>{5}), (Ecdf{{5, 1.0}}));
  EXPECT_EQ(ecdf(std::vector<double>{1, 2, 2, 4}), (Ecdf{{1, 0.25}, {2, 0.75}, {4, 1.0}}));
  EXPECT_THROW(ecdf(std::vector<double>{}), EmptyInput);
}

TEST(Ecdf, MonotoneAndMatchesCounting) {
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> v(0, 50);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> x(1 + trial * 7);
    for (auto& a : x) a = v(rng) / 7.0;
    const auto e = ecdf(x);
    EXPECT_EQ(e.back().cumulative_fraction, 1.0);
    for (std::size_t i = 0; i < e.size(); ++i) {
      EXPECT_NEAR(e[i].cumulative_fraction, oracle::ecdf_at(x, e[i].value), 1e-15);
      if (i) {
        EXPECT_GT(e[i].value, e[i - 1].value);
        EXPECT_GE(e[i].cumulative_fraction, e[i - 1].cumulative_fraction);
      }
    }
  }
}

TEST(Density, ConstantIsSingleBin) {
  const auto h = histogram_density(std::vector<double>(20, 0.3));
  ASSERT_EQ(h.bins.size(), 1u);
  EXPECT_EQ(h.bins[0].density * h.width, 1.0);
}

TEST(Density, UniformSampleIsFlat) {
  std::mt19937_64 rng(12345);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(10000);
  for (auto& a : x) a = u(rng);
  const auto h = histogram_density(x);
  EXPECT_GE(h.bins.size(), kMinBins);
  for (const auto& b : h.bins) EXPECT_NEAR(b.density, 1.0, 0.15);
}

TEST(Density, IntegratesToOne) {
  std::mt19937_64 rng(77);
  std::lognormal_distribution<double> ln(0, 2);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> x(2 + trial * 13);
    for (auto& a : x) a = ln(rng);
    EXPECT_NEAR(integral(histogram_density(x)), 1.0, 1e-9);
    EXPECT_NEAR(integral(histogram_density(x, 3)), 1.0, 1e-9);
  }
}

TEST(YearlyTable, Counting) {
  CohortSummary s;
  s.ctu_ids = {"a", "b"};
  s.bu_ids = {"c"};
  const std::vector<UserMetrics> m{row("a", 3), row("b", 3), row("c", 1), row("x", 2)};
  const auto rows = yearly_table(m, s, 3200);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_EQ(rows[0].span_years, 1);
  EXPECT_EQ(rows[0].ctu_count, 0u);
  EXPECT_EQ(rows[0].bu_count, 1u);
  EXPECT_EQ(rows[0].bu_pct, 100.0);
  EXPECT_EQ(rows[0].tweets_per_year, 3200.0);
  EXPECT_EQ(rows[1].span_years, 3);
  EXPECT_EQ(rows[1].ctu_count, 2u);
  EXPECT_EQ(rows[1].bu_count, 0u);
  EXPECT_NEAR(rows[1].tweets_per_year, 3200.0 / 3, 1e-12);
}

TEST(ActiveYearSets, ExtractionAndGrouping) {
  Corpus c;
  c.timelines["a"] = make_timeline("a", {at(2020), at(2021, 3)});
  c.timelines["b"] = make_timeline("b", {at(2021, 1), at(2020, 12)});
  c.timelines["c"] = make_timeline("c", {at(2019)});
  EXPECT_EQ(active_years(c.timelines["a"]), (std::vector<int>{2020, 2021}));
  CohortSummary s;
  s.ctu_ids = {"a", "b"};
  s.bu_ids = {"c"};
  const auto sets = active_year_sets(c, s);
  ASSERT_EQ(sets.at(Group::ctu).size(), 1u);
  EXPECT_EQ(sets.at(Group::ctu)[0].users, 2u);
  EXPECT_EQ(sets.at(Group::ctu)[0].pct, 100.0);
  EXPECT_EQ(sets.at(Group::bu)[0].years, std::vector<int>{2019});
  std::ostringstream os;
  write_year_sets_csv(sets.at(Group::ctu), os);
  EXPECT_EQ(os.str(), "years,n_years,users,pct\n2020;2021,2,2,100\n");
}

TEST(UserYearlySeries, SingleYearAndHandBucketing) {
  const auto one = user_yearly_series(make_timeline("u", {at(2020, 1), at(2020, 5), at(2020, 9)}, {0.1, 0.2, 0.3}));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0].tweet_count, 3u);

  const auto three = user_yearly_series(make_timeline(
      "u", {at(2018, 2), at(2018, 7), at(2019, 1), at(2020, 3), at(2020, 4), at(2020, 12, 31)},
      {0.2, 0.4, 1.0, 0.0, 0.3, 0.6}));
  ASSERT_EQ(three.size(), 3u);
  EXPECT_EQ(three[0].year, 2018);
  EXPECT_EQ(three[0].tweet_count, 2u);
  EXPECT_NEAR(three[0].mean_toxicity, 0.3, 1e-15);
  EXPECT_EQ(three[1].mean_toxicity, 1.0);
  EXPECT_EQ(three[2].tweet_count, 3u);
  EXPECT_NEAR(three[2].mean_toxicity, 0.3, 1e-15);
}

TEST(GroupTables, ConserveCountsOnSyntheticCohort) {
  synth::GenSpec spec;
  spec.seed = 3;
  spec.n_users = 200;
  spec.events_per_user = 150;
  spec.process = synth::Pareto{1.2, 3600};
  spec.toxicity_model = synth::TwoClassToxicity{0.2, 0.8, 0.1};
  spec.start_spread_days = 2000;
  spec.emit_text = false;
  const auto corpus = synth::generate(spec);
  const auto metrics = compute_metrics(corpus);
  const auto s = classify(metrics);
  std::size_t ctu = 0, bu = 0;
  for (const auto& r : yearly_table(metrics, s)) {
    ctu += r.ctu_count;
    bu += r.bu_count;
  }
  EXPECT_EQ(ctu, s.ctu_ids.size());
  EXPECT_EQ(bu, s.bu_ids.size());
  const auto sets = active_year_sets(corpus, s);
  for (auto g : {Group::ctu, Group::bu}) {
    std::size_t n = 0;
    for (const auto& r : sets.at(g)) n += r.users;
    EXPECT_EQ(n, g == Group::ctu ? s.ctu_ids.size() : s.bu_ids.size());
  }
}

TEST(Svg, ProducesWellFormedDocument) {
  const auto svg = svg_line_chart("t <&>", "x", "y", {{"a", {{0, 0}, {1, 1}}}}, true);
  EXPECT_EQ(svg.rfind("<svg", 0), 0u);
  EXPECT_NE(svg.find("t &lt;&amp;&gt;"), std::string::npos);
  EXPECT_NE(svg.find("</svg>"), std::string::npos);
}
