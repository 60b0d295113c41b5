#pragma once

// Median-split quadrant classification into Consistently Toxic Users (CTU:
// gini at or below the cohort median and mean toxicity at or above it) and
// Baseline Users (everyone else), plus Spearman rank correlation between the
// two coordinates.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <string>
#include <vector>

#include <boost/math/distributions/students_t.hpp>
#include <json.hpp>

#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/metrics.hpp"

namespace ctu {

enum class Group { ctu, bu };

inline const char* group_name(Group g) { return g == Group::ctu ? "CTU" : "BU"; }

struct SpearmanResult {
  double rho = 0.0;
  double p = 1.0;
};

struct CohortSummary {
  double median_mean_toxicity = 0.0;
  double median_gini = 0.0;
  // Undefined when either coordinate is constant or fewer than 3 users.
  std::optional<double> spearman_rho;
  std::optional<double> spearman_p;
  std::set<std::string> ctu_ids;
  std::set<std::string> bu_ids;
  // Users without mean toxicity or gini; not part of the medians.
  std::set<std::string> excluded_ids;

  std::optional<Group> group_of(const std::string& user_id) const {
    if (ctu_ids.count(user_id)) return Group::ctu;
    if (bu_ids.count(user_id)) return Group::bu;
    return std::nullopt;
  }
};

enum class PValueMethod { t_approximation, exact_permutation };

inline double median(std::vector<double> v) {
  if (v.empty()) throw EmptyInput("median of an empty sequence");
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double upper = v[mid];
  if (v.size() % 2) return upper;
  const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return (lower + upper) / 2.0;
}

// 1-based ranks with ties sharing the average of the positions they span.
inline std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    const double avg = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = avg;
    i = j;
  }
  return ranks;
}

namespace detail {

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const auto n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - ma, db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0.0 || sbb == 0.0) throw DegenerateInput("correlation undefined for a constant input");
  return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

inline double t_approx_p(double rho, std::size_t n) {
  if (std::abs(rho) >= 1.0) return 0.0;
  const double df = static_cast<double>(n) - 2.0;
  const double t = rho * std::sqrt(df / (1.0 - rho * rho));
  boost::math::students_t dist(df);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t))), 0.0, 1.0);
}

// Two-sided permutation p: share of all n! orderings of the y ranks whose
// |rho| reaches the observed one. With fixed marginals rho is an affine
// function of sum(rx * ry), so that sum is what gets compared.
inline double exact_permutation_p(const std::vector<double>& rx, std::vector<double> ry) {
  const auto n = static_cast<double>(rx.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  auto centered_dot = [&](const std::vector<double>& y) {
    double s = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) s += (rx[i] - mx) * (y[i] - my);
    return s;
  };
  const double observed = std::abs(centered_dot(ry));
  const double tol = 1e-9 * std::max(1.0, observed);
  std::sort(ry.begin(), ry.end());
  // next_permutation visits each distinct arrangement of a multiset once;
  // every distinct arrangement stands for the same number of raw orderings,
  // so the ratio is unaffected by ties.
  std::uint64_t hits = 0, total = 0;
  do {
    ++total;
    if (std::abs(centered_dot(ry)) >= observed - tol) ++hits;
  } while (std::next_permutation(ry.begin(), ry.end()));
  return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace detail

inline constexpr std::size_t kMaxExactPermutationSize = 12;

// Spearman rho as the Pearson correlation of average ranks.
inline SpearmanResult spearman(std::span<const double> x, std::span<const double> y,
                               PValueMethod method = PValueMethod::t_approximation) {
  if (x.size() != y.size())
    throw LengthMismatch("spearman inputs differ in length: " + std::to_string(x.size()) + " vs " +
                         std::to_string(y.size()));
  if (x.size() < 3) throw LengthMismatch("spearman needs at least 3 pairs");
  if (method == PValueMethod::exact_permutation && x.size() > kMaxExactPermutationSize)
    throw ConfigError("exact permutation p-value is limited to n <= " + std::to_string(kMaxExactPermutationSize));
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  SpearmanResult r;
  r.rho = detail::pearson(rx, ry);
  if (method == PValueMethod::exact_permutation) {
    r.p = detail::exact_permutation_p(rx, ry);
  } else {
    r.p = detail::t_approx_p(r.rho, x.size());
  }
  return r;
}

inline bool is_ctu(double mean_toxicity, double gini, double median_toxicity, double median_gini) {
  return gini <= median_gini && mean_toxicity >= median_toxicity;
}

inline CohortSummary classify(std::span<const UserMetrics> metrics,
                              PValueMethod method = PValueMethod::t_approximation) {
  CohortSummary s;
  std::vector<const UserMetrics*> usable;
  for (const auto& m : metrics) {
    if (m.classifiable())
      usable.push_back(&m);
    else
      s.excluded_ids.insert(m.user_id);
  }
  if (usable.size() < 2)
    throw TooFewUsers("classification needs at least 2 users with defined metrics, got " +
                      std::to_string(usable.size()));

  std::vector<double> tox, gin;
  tox.reserve(usable.size());
  gin.reserve(usable.size());
  for (const auto* m : usable) {
    tox.push_back(*m->mean_toxicity);
    gin.push_back(*m->gini);
  }
  s.median_mean_toxicity = median(tox);
  s.median_gini = median(gin);

  for (const auto* m : usable) {
    if (is_ctu(*m->mean_toxicity, *m->gini, s.median_mean_toxicity, s.median_gini))
      s.ctu_ids.insert(m->user_id);
    else
      s.bu_ids.insert(m->user_id);
  }

  if (usable.size() >= 3 && (method != PValueMethod::exact_permutation || usable.size() <= kMaxExactPermutationSize)) {
    try {
      const auto r = spearman(tox, gin, method);
      s.spearman_rho = r.rho;
      s.spearman_p = r.p;
    } catch (const DegenerateInput&) {
      // constant coordinate: rho stays undefined
    }
  }
  return s;
}

inline void write_classification_csv(const CohortSummary& s, std::ostream& out) {
  std::vector<std::pair<std::string, Group>> rows;
  for (const auto& id : s.ctu_ids) rows.emplace_back(id, Group::ctu);
  for (const auto& id : s.bu_ids) rows.emplace_back(id, Group::bu);
  std::sort(rows.begin(), rows.end());
  csv::write_row(out, {"user_id", "group"});
  for (const auto& [id, g] : rows) csv::write_row(out, {id, group_name(g)});
}

// Summary JSON in the shape of the dataset overview table: users and total
// events per group, plus the medians and the correlation.
inline nlohmann::json summary_json(const CohortSummary& s, std::span<const UserMetrics> metrics) {
  std::size_t ctu_events = 0, bu_events = 0;
  for (const auto& m : metrics) {
    if (s.ctu_ids.count(m.user_id)) ctu_events += m.event_count;
    if (s.bu_ids.count(m.user_id)) bu_events += m.event_count;
  }
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  nlohmann::json j;
  j["median_mean_toxicity"] = s.median_mean_toxicity;
  j["median_gini"] = s.median_gini;
  j["spearman_rho"] = opt(s.spearman_rho);
  j["spearman_p"] = opt(s.spearman_p);
  j["groups"] = {
      {"total", {{"users", s.ctu_ids.size() + s.bu_ids.size()}, {"events", ctu_events + bu_events}}},
      {"CTU", {{"users", s.ctu_ids.size()}, {"events", ctu_events}}},
      {"BU", {{"users", s.bu_ids.size()}, {"events", bu_events}}},
  };
  j["excluded_users"] = s.excluded_ids;
  return j;
}

}  // namespace ctu
