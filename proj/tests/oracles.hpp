#pragma once

// Independent reference computations used only by the tests. Each one takes
// a deliberately different route from the library code it checks: quadratic
// loops instead of sorting, 50-digit decimal arithmetic instead of doubles,
// counting instead of ranking.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "ctu/timeline.hpp"

namespace oracle {

using Big = boost::multiprecision::cpp_dec_float_50;

// Gini by the double sum of absolute differences.
inline double gini_pairwise(const std::vector<double>& x) {
  Big total = 0, diff = 0;
  for (double a : x) total += a;
  if (total == 0) return 0.0;
  for (double a : x)
    for (double b : x) diff += abs(Big(a) - Big(b));
  const Big n = static_cast<long long>(x.size());
  const Big mean = total / n;
  return static_cast<double>(diff / (2 * n * n * mean));
}

// Same double loop in long double; fast enough for n in the hundreds.
inline double gini_pairwise_ld(const std::vector<double>& x) {
  long double total = 0, diff = 0;
  for (double a : x) total += a;
  if (total == 0) return 0.0;
  for (double a : x)
    for (double b : x) diff += std::abs(static_cast<long double>(a) - b);
  const auto n = static_cast<long double>(x.size());
  return static_cast<double>(diff / (2 * n * total));
}

inline Big big_mean(const std::vector<double>& x) {
  Big s = 0;
  for (double v : x) s += v;
  return s / Big(static_cast<long long>(x.size()));
}

// (sigma - mu) / (sigma + mu), population sigma, in 50-digit arithmetic.
inline std::optional<double> burstiness_big(const std::vector<double>& gaps) {
  const Big mu = big_mean(gaps);
  Big ss = 0;
  for (double g : gaps) ss += (Big(g) - mu) * (Big(g) - mu);
  const Big sigma = sqrt(ss / Big(static_cast<long long>(gaps.size())));
  if (sigma + mu == 0) return std::nullopt;
  return static_cast<double>((sigma - mu) / (sigma + mu));
}

// Average rank by counting: (#less) + (#equal + 1) / 2.
inline std::vector<double> ranks_by_counting(const std::vector<double>& x) {
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::size_t less = 0, equal = 0;
    for (double v : x) {
      less += v < x[i];
      equal += v == x[i];
    }
    r[i] = static_cast<double>(less) + (static_cast<double>(equal) + 1.0) / 2.0;
  }
  return r;
}

inline double pearson_big(const std::vector<double>& a, const std::vector<double>& b) {
  const Big ma = big_mean(a), mb = big_mean(b);
  Big sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (Big(a[i]) - ma) * (Big(b[i]) - mb);
    saa += (Big(a[i]) - ma) * (Big(a[i]) - ma);
    sbb += (Big(b[i]) - mb) * (Big(b[i]) - mb);
  }
  return static_cast<double>(sab / sqrt(saa * sbb));
}

inline double spearman_rho(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson_big(ranks_by_counting(x), ranks_by_counting(y));
}

// Median by full sort.
inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

struct Point {
  std::string id;
  double tox;
  double gini;
};

// Second, separate pass over the cohort: compute medians, then test every
// user against both thresholds.
inline std::set<std::string> quadrant_scan(const std::vector<Point>& pts) {
  std::vector<double> t, g;
  for (const auto& p : pts) {
    t.push_back(p.tox);
    g.push_back(p.gini);
  }
  const double mt = median(t), mg = median(g);
  std::set<std::string> out;
  for (const auto& p : pts)
    if (!(p.gini > mg) && !(p.tox < mt)) out.insert(p.id);
  return out;
}

// Week activity by scanning every window and checking each event.
inline std::vector<bool> weeks_by_scan(const ctu::Timeline& t) {
  const auto anchor = t.events.front().timestamp;
  const auto last = t.events.back().timestamp;
  std::vector<bool> out;
  for (ctu::EpochSeconds start = anchor; start <= last; start += ctu::kSecondsPerWeek) {
    bool any = false;
    for (const auto& e : t.events) any = any || (e.timestamp >= start && e.timestamp < start + ctu::kSecondsPerWeek);
    out.push_back(any);
  }
  return out;
}

// Fraction of values <= v, by counting.
inline double ecdf_at(const std::vector<double>& x, double v) {
  std::size_t c = 0;
  for (double a : x) c += a <= v;
  return static_cast<double>(c) / static_cast<double>(x.size());
}

}  // namespace oracle
