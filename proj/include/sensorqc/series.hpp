#pragma once

#include <charconv>
#include <chrono>
#include <cstdio>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sensorqc/errors.hpp"

namespace sensorqc {

using Timestamp = std::chrono::sys_seconds;
inline constexpr std::chrono::hours kHour{1};

enum class Variable { temperature_c, dew_point_c, wind_gust_ms, rh_percent };

inline std::string_view to_string(Variable v) {
  switch (v) {
    case Variable::temperature_c: return "temperature_c";
    case Variable::dew_point_c: return "dew_point_c";
    case Variable::wind_gust_ms: return "wind_gust_ms";
    case Variable::rh_percent: return "rh_percent";
  }
  return "unknown";
}

inline Variable parse_variable(std::string_view s) {
  if (s == "temperature_c") return Variable::temperature_c;
  if (s == "dew_point_c") return Variable::dew_point_c;
  if (s == "wind_gust_ms") return Variable::wind_gust_ms;
  if (s == "rh_percent") return Variable::rh_percent;
  throw ValidationError("unknown variable '" + std::string(s) + "'");
}

/// Hourly series on a regular grid; std::nullopt marks a gap.
struct LabeledSeries {
  std::string station_id;
  Variable variable = Variable::temperature_c;
  Timestamp start{};
  std::vector<std::optional<double>> values;
  std::optional<std::vector<bool>> truth_labels;

  std::size_t size() const { return values.size(); }
  Timestamp time_at(std::size_t i) const { return start + kHour * static_cast<long>(i); }

  /// Local hour of day of sample i for a fixed UTC offset.
  int hour_of_day(std::size_t i, int utc_offset_hours = 0) const {
    const auto local = time_at(i) + std::chrono::hours(utc_offset_hours);
    const auto since_midnight = local - std::chrono::floor<std::chrono::days>(local);
    return static_cast<int>(std::chrono::duration_cast<std::chrono::hours>(since_midnight).count());
  }

  std::size_t gap_count() const {
    std::size_t n = 0;
    for (const auto& v : values) n += v ? 0 : 1;
    return n;
  }
};

// RFC 3339 timestamps ---------------------------------------------------------

namespace detail {

inline bool parse_int(std::string_view s, int& out) {
  if (s.empty()) return false;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace detail

/// Parses "YYYY-MM-DDTHH:MM:SS[.frac](Z|+HH:MM|-HH:MM)". Fractional seconds
/// are rounded to the nearest second.
inline std::optional<Timestamp> parse_rfc3339(std::string_view s) {
  using namespace std::chrono;
  if (s.size() < 20 || s[4] != '-' || s[7] != '-' || (s[10] != 'T' && s[10] != 't' && s[10] != ' ') ||
      s[13] != ':' || s[16] != ':') {
    return std::nullopt;
  }
  int y, mo, d, hh, mm, ss;
  if (!detail::parse_int(s.substr(0, 4), y) || !detail::parse_int(s.substr(5, 2), mo) ||
      !detail::parse_int(s.substr(8, 2), d) || !detail::parse_int(s.substr(11, 2), hh) ||
      !detail::parse_int(s.substr(14, 2), mm) || !detail::parse_int(s.substr(17, 2), ss)) {
    return std::nullopt;
  }
  std::size_t pos = 19;
  double frac = 0.0;
  if (pos < s.size() && s[pos] == '.') {
    std::size_t end = pos + 1;
    while (end < s.size() && s[end] >= '0' && s[end] <= '9') ++end;
    if (end == pos + 1) return std::nullopt;
    std::string digits = "0" + std::string(s.substr(pos, end - pos));
    frac = std::stod(digits);
    pos = end;
  }
  if (pos >= s.size()) return std::nullopt;
  int offset_minutes = 0;
  if (s[pos] == 'Z' || s[pos] == 'z') {
    ++pos;
  } else if (s[pos] == '+' || s[pos] == '-') {
    if (s.size() != pos + 6 || s[pos + 3] != ':') return std::nullopt;
    int oh, om;
    if (!detail::parse_int(s.substr(pos + 1, 2), oh) || !detail::parse_int(s.substr(pos + 4, 2), om)) {
      return std::nullopt;
    }
    if (oh > 23 || om > 59) return std::nullopt;
    offset_minutes = (s[pos] == '-' ? -1 : 1) * (oh * 60 + om);
    pos += 6;
  } else {
    return std::nullopt;
  }
  if (pos != s.size()) return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 60) return std::nullopt;

  const year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) return std::nullopt;
  auto t = sys_days{ymd} + hours{hh} + minutes{mm} + seconds{ss} - minutes{offset_minutes};
  if (frac >= 0.5) t += seconds{1};
  return time_point_cast<seconds>(t);
}

inline std::string format_rfc3339(Timestamp t) {
  using namespace std::chrono;
  const auto day_point = floor<days>(t);
  const year_month_day ymd{day_point};
  const hh_mm_ss hms{t - day_point};
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02uT%02ld:%02ld:%02ldZ", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()),
                static_cast<long>(hms.hours().count()), static_cast<long>(hms.minutes().count()),
                static_cast<long>(hms.seconds().count()));
  return buf;
}

}  // namespace sensorqc
