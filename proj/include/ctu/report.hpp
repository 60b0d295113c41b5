#pragma once

// Plot-ready data behind the figures and tables: ECDFs, histogram
// densities, the activity-span table, active-year sets, per-user yearly
// series, plus a bare-bones SVG line chart for quick looks.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ctu/churn.hpp"
#include "ctu/classifier.hpp"
#include "ctu/csv.hpp"
#include "ctu/error.hpp"
#include "ctu/format.hpp"
#include "ctu/metrics.hpp"
#include "ctu/timeline.hpp"

namespace ctu {

struct EcdfPoint {
  double value = 0.0;
  double cumulative_fraction = 0.0;

  friend bool operator==(const EcdfPoint&, const EcdfPoint&) = default;
};

using Ecdf = std::vector<EcdfPoint>;

struct DensityBin {
  double center = 0.0;
  double density = 0.0;
};

struct Histogram {
  double width = 0.0;
  std::vector<DensityBin> bins;
};

struct YearlyRow {
  int span_years = 0;
  std::size_t ctu_count = 0;
  double ctu_pct = 0.0;
  std::size_t bu_count = 0;
  double bu_pct = 0.0;
  double tweets_per_year = 0.0;
};

struct YearSetRow {
  std::vector<int> years;
  std::size_t users = 0;
  double pct = 0.0;
};

struct YearlyPoint {
  int year = 0;
  std::size_t tweet_count = 0;
  double mean_toxicity = 0.0;
};

// Step function at the sorted distinct values; fraction = count(<= v) / n.
inline Ecdf ecdf(std::span<const double> values) {
  if (values.empty()) throw EmptyInput("ecdf of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  Ecdf out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i + 1 < v.size() && v[i + 1] == v[i]) continue;
    out.push_back({v[i], static_cast<double>(i + 1) / n});
  }
  out.back().cumulative_fraction = 1.0;
  return out;
}

// Linear-interpolation quantile of sorted data (the common "type 7").
inline double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw EmptyInput("quantile of an empty sequence");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

inline constexpr std::size_t kMinBins = 10;
inline constexpr std::size_t kMaxBins = 200;

// Freedman-Diaconis bin count, clamped to [kMinBins, kMaxBins].
inline std::size_t freedman_diaconis_bins(std::span<const double> sorted) {
  const double range = sorted.back() - sorted.front();
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  if (range <= 0.0 || iqr <= 0.0) return kMinBins;
  const double width = 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
  const double bins = std::ceil(range / width);
  return std::clamp<std::size_t>(static_cast<std::size_t>(bins), kMinBins, kMaxBins);
}

// Histogram density estimate; sum(density * width) = 1. A constant input
// collapses to one unit-width bin centred on the value.
inline Histogram histogram_density(std::span<const double> values, std::optional<std::size_t> bins = std::nullopt) {
  if (values.empty()) throw EmptyInput("density of an empty sequence");
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const double lo = v.front(), hi = v.back();
  const auto n = static_cast<double>(v.size());

  Histogram h;
  if (hi == lo) {
    h.width = 1.0;
    h.bins.push_back({lo, 1.0});
    return h;
  }
  const std::size_t k = bins.value_or(freedman_diaconis_bins(v));
  if (k == 0) throw ConfigError("histogram needs at least one bin");
  h.width = (hi - lo) / static_cast<double>(k);
  std::vector<std::size_t> counts(k, 0);
  for (double x : v) {
    auto idx = static_cast<std::size_t>((x - lo) / h.width);
    counts[std::min(idx, k - 1)] += 1;
  }
  h.bins.reserve(k);
  for (std::size_t i = 0; i < k; ++i)
    h.bins.push_back({lo + (static_cast<double>(i) + 0.5) * h.width, static_cast<double>(counts[i]) / (n * h.width)});
  return h;
}

// Users per activity span and group. Excluded users are not counted.
inline std::vector<YearlyRow> yearly_table(std::span<const UserMetrics> metrics, const CohortSummary& summary,
                                           std::optional<std::size_t> required_length = std::nullopt) {
  struct Acc {
    std::size_t ctu = 0, bu = 0;
    double events = 0.0;
  };
  std::map<int, Acc> by_span;
  for (const auto& m : metrics) {
    const auto g = summary.group_of(m.user_id);
    if (!g) continue;
    auto& a = by_span[m.span_years];
    (*g == Group::ctu ? a.ctu : a.bu) += 1;
    a.events += static_cast<double>(m.event_count);
  }
  const auto n_ctu = static_cast<double>(summary.ctu_ids.size());
  const auto n_bu = static_cast<double>(summary.bu_ids.size());
  std::vector<YearlyRow> rows;
  for (const auto& [span, a] : by_span) {
    YearlyRow r;
    r.span_years = span;
    r.ctu_count = a.ctu;
    r.bu_count = a.bu;
    r.ctu_pct = n_ctu > 0 ? 100.0 * static_cast<double>(a.ctu) / n_ctu : 0.0;
    r.bu_pct = n_bu > 0 ? 100.0 * static_cast<double>(a.bu) / n_bu : 0.0;
    // without a fixed length, fall back to the mean event count of the row
    const double per_user =
        required_length ? static_cast<double>(*required_length) : a.events / static_cast<double>(a.ctu + a.bu);
    r.tweets_per_year = per_user / span;
    rows.push_back(r);
  }
  return rows;
}

inline std::vector<int> active_years(const Timeline& t) {
  std::set<int> years;
  for (const auto& e : t.events) years.insert(utc_year(e.timestamp));
  return {years.begin(), years.end()};
}

// Users grouped by their exact set of active calendar years, per group.
// Rows are ordered by user count (descending), then by the year list.
inline std::map<Group, std::vector<YearSetRow>> active_year_sets(const Corpus& corpus, const CohortSummary& summary) {
  std::map<Group, std::map<std::vector<int>, std::size_t>> counts;
  counts[Group::ctu];
  counts[Group::bu];
  for (const auto& [user, tl] : corpus.timelines) {
    const auto g = summary.group_of(user);
    if (!g || tl.empty()) continue;
    counts[*g][active_years(tl)] += 1;
  }
  std::map<Group, std::vector<YearSetRow>> out;
  for (const auto& [g, table] : counts) {
    const auto size = static_cast<double>(g == Group::ctu ? summary.ctu_ids.size() : summary.bu_ids.size());
    auto& rows = out[g];
    for (const auto& [years, n] : table) rows.push_back({years, n, size > 0 ? 100.0 * static_cast<double>(n) / size : 0.0});
    std::stable_sort(rows.begin(), rows.end(), [](const YearSetRow& a, const YearSetRow& b) { return a.users > b.users; });
  }
  return out;
}

inline std::vector<YearlyPoint> user_yearly_series(const Timeline& t) {
  std::map<int, std::pair<std::size_t, double>> acc;
  for (const auto& e : t.events) {
    if (!e.toxicity) throw UnscoredEvent(t.user_id, e.event_id);
    auto& [count, sum] = acc[utc_year(e.timestamp)];
    count += 1;
    sum += *e.toxicity;
  }
  std::vector<YearlyPoint> out;
  for (const auto& [year, cs] : acc) out.push_back({year, cs.first, cs.second / static_cast<double>(cs.first)});
  return out;
}

// ---- writers ---------------------------------------------------------------

inline void write_ecdf_tsv(const Ecdf& e, std::ostream& out) {
  for (const auto& p : e) out << fmt::shortest(p.value) << '\t' << fmt::shortest(p.cumulative_fraction) << '\n';
}

inline void write_density_tsv(const Histogram& h, std::ostream& out) {
  for (const auto& b : h.bins) out << fmt::shortest(b.center) << '\t' << fmt::shortest(b.density) << '\n';
}

inline void write_yearly_table_csv(const std::vector<YearlyRow>& rows, std::ostream& out) {
  csv::write_row(out, {"span_years", "ctu_users", "ctu_pct", "bu_users", "bu_pct", "tweets_per_year"});
  for (const auto& r : rows)
    csv::write_row(out, {std::to_string(r.span_years), std::to_string(r.ctu_count), fmt::g10(r.ctu_pct),
                         std::to_string(r.bu_count), fmt::g10(r.bu_pct), fmt::g10(r.tweets_per_year)});
}

inline std::string join_years(const std::vector<int>& years) {
  std::string s;
  for (std::size_t i = 0; i < years.size(); ++i) {
    if (i) s += ';';
    s += std::to_string(years[i]);
  }
  return s;
}

inline void write_year_sets_csv(const std::vector<YearSetRow>& rows, std::ostream& out) {
  csv::write_row(out, {"years", "n_years", "users", "pct"});
  for (const auto& r : rows)
    csv::write_row(out, {join_years(r.years), std::to_string(r.years.size()), std::to_string(r.users), fmt::g10(r.pct)});
}

struct SvgSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

// Static polyline chart. Axes are scaled to the union of all series.
inline std::string svg_line_chart(const std::string& title, const std::string& x_label, const std::string& y_label,
                                  const std::vector<SvgSeries>& series, bool step = false) {
  constexpr double W = 640, H = 420, L = 60, R = 20, T = 40, B = 50;
  double xmin = INFINITY, xmax = -INFINITY, ymin = INFINITY, ymax = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (!(xmin <= xmax)) xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  if (xmax == xmin) xmin -= 0.5, xmax += 0.5;
  ymin = std::min(ymin, 0.0);
  if (ymax == ymin) ymax = ymin + 1;
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - ymin) / (ymax - ymin) * (H - T - B); };

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  auto esc = [](const std::string& s) {
    std::string o;
    for (char c : s) {
      if (c == '<') o += "&lt;";
      else if (c == '>') o += "&gt;";
      else if (c == '&') o += "&amp;";
      else o += c;
    }
    return o;
  };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << esc(title) << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\" font-size=\"12\">" << esc(x_label)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << H / 2 << "\" text-anchor=\"middle\" font-size=\"12\" transform=\"rotate(-90 16 "
     << H / 2 << ")\">" << esc(y_label) << "</text>\n";
  os << "<text x=\"" << L << "\" y=\"" << H - B + 16 << "\" font-size=\"10\">" << fmt::g10(xmin) << "</text>\n";
  os << "<text x=\"" << W - R << "\" y=\"" << H - B + 16 << "\" text-anchor=\"end\" font-size=\"10\">"
     << fmt::g10(xmax) << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << H - B << "\" text-anchor=\"end\" font-size=\"10\">" << fmt::g10(ymin)
     << "</text>\n";
  os << "<text x=\"" << L - 4 << "\" y=\"" << T + 4 << "\" text-anchor=\"end\" font-size=\"10\">" << fmt::g10(ymax)
     << "</text>\n";
  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    const char* color = colors[i % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t k = 0; k < s.points.size(); ++k) {
      const auto [x, y] = s.points[k];
      if (step && k > 0) os << fmt::g10(px(x)) << ',' << fmt::g10(py(s.points[k - 1].second)) << ' ';
      os << fmt::g10(px(x)) << ',' << fmt::g10(py(y)) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" text-anchor=\"end\" font-size=\"11\" fill=\""
       << color << "\">" << esc(s.label) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace ctu
