#pragma once

// UTC instants at second precision. Stored as signed seconds since the Unix
// epoch; parsed from RFC 3339 strings or integer epoch seconds.

#include <charconv>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>

namespace ctu {

using EpochSeconds = std::int64_t;

inline constexpr EpochSeconds kSecondsPerDay = 86'400;
inline constexpr EpochSeconds kSecondsPerWeek = 7 * kSecondsPerDay;
// 365.25 days: the Julian year used for activity-span binning.
inline constexpr EpochSeconds kSecondsPerJulianYear = 31'557'600;

// 2006-01-01T00:00:00Z, the default lower bound for accepted events.
inline constexpr EpochSeconds kDefaultTimestampFloor = 1'136'073'600;

namespace detail {

inline bool read_digits(std::string_view s, std::size_t pos, std::size_t count, int& out) {
  if (pos + count > s.size()) return false;
  int v = 0;
  for (std::size_t i = pos; i < pos + count; ++i) {
    const char c = s[i];
    if (c < '0' || c > '9') return false;
    v = v * 10 + (c - '0');
  }
  out = v;
  return true;
}

}  // namespace detail

inline EpochSeconds epoch_from_civil(int y, unsigned m, unsigned d, int hh = 0, int mm = 0, int ss = 0) {
  using namespace std::chrono;
  const sys_days date{year{y} / month{m} / day{d}};
  return static_cast<EpochSeconds>(date.time_since_epoch().count()) * kSecondsPerDay + hh * 3600 + mm * 60 + ss;
}

// Accepts `YYYY-MM-DD[Tt ]HH:MM:SS[.frac](Z|z|+hh:mm|-hh:mm)`. Fractional
// seconds are truncated toward the start of the second.
inline std::optional<EpochSeconds> parse_rfc3339(std::string_view s) {
  int y, mo, d, hh, mi, ss;
  if (!detail::read_digits(s, 0, 4, y) || s.size() < 20 || s[4] != '-' || !detail::read_digits(s, 5, 2, mo) ||
      s[7] != '-' || !detail::read_digits(s, 8, 2, d))
    return std::nullopt;
  if (s[10] != 'T' && s[10] != 't' && s[10] != ' ') return std::nullopt;
  if (!detail::read_digits(s, 11, 2, hh) || s[13] != ':' || !detail::read_digits(s, 14, 2, mi) || s[16] != ':' ||
      !detail::read_digits(s, 17, 2, ss))
    return std::nullopt;

  std::size_t pos = 19;
  if (pos < s.size() && s[pos] == '.') {
    ++pos;
    const std::size_t frac_start = pos;
    while (pos < s.size() && s[pos] >= '0' && s[pos] <= '9') ++pos;
    if (pos == frac_start) return std::nullopt;
  }
  if (pos >= s.size()) return std::nullopt;

  int offset = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    int oh, om;
    if (!detail::read_digits(s, pos + 1, 2, oh) || pos + 3 >= s.size() || s[pos + 3] != ':' ||
        !detail::read_digits(s, pos + 4, 2, om) || oh > 23 || om > 59)
      return std::nullopt;
    offset = (oh * 3600 + om * 60) * (s[pos] == '-' ? -1 : 1);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;

  using namespace std::chrono;
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  // 60 is allowed for leap seconds and folds into the next minute.
  if (!ymd.ok() || hh > 23 || mi > 59 || ss > 60) return std::nullopt;
  return epoch_from_civil(y, mo, d, hh, mi, ss) - offset;
}

inline std::optional<EpochSeconds> parse_epoch_integer(std::string_view s) {
  EpochSeconds v = 0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end || s.empty()) return std::nullopt;
  return v;
}

// Either form; used by the CSV reader where every field is text.
inline std::optional<EpochSeconds> parse_timestamp(std::string_view s) {
  if (auto v = parse_epoch_integer(s)) return v;
  return parse_rfc3339(s);
}

// Canonical form: `YYYY-MM-DDTHH:MM:SSZ`.
inline std::string format_rfc3339(EpochSeconds t) {
  using namespace std::chrono;
  EpochSeconds days = t / kSecondsPerDay;
  EpochSeconds rem = t % kSecondsPerDay;
  if (rem < 0) {
    rem += kSecondsPerDay;
    --days;
  }
  const year_month_day ymd{sys_days{std::chrono::days{days}}};
  char buf[32];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02d:%02d:%02dZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), static_cast<int>(rem / 3600),
                static_cast<int>(rem / 60 % 60), static_cast<int>(rem % 60));
  return buf;
}

inline int utc_year(EpochSeconds t) {
  using namespace std::chrono;
  EpochSeconds days = t / kSecondsPerDay;
  if (t % kSecondsPerDay < 0) --days;
  return static_cast<int>(year_month_day{sys_days{std::chrono::days{days}}}.year());
}

}  // namespace ctu
