#pragma once

// Choice of which samples are tested: one extremum per local day, a fixed set
// of local hours, or every present sample.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "sensorqc/errors.hpp"
#include "sensorqc/series.hpp"

namespace sensorqc {

struct TestSampleSelector {
  enum class Mode { daily_min, daily_max, fixed_hours, all };
  Mode mode = Mode::all;
  std::vector<int> hours;

  static TestSampleSelector daily_min() { return {Mode::daily_min, {}}; }
  static TestSampleSelector daily_max() { return {Mode::daily_max, {}}; }
  static TestSampleSelector fixed_hours(std::vector<int> h) { return {Mode::fixed_hours, std::move(h)}; }
  static TestSampleSelector all() { return {Mode::all, {}}; }

  bool operator==(const TestSampleSelector&) const = default;
};

/// Accepts "all", "daily_min", "daily_max" or "hours:9,15".
inline TestSampleSelector parse_selector(std::string_view s) {
  if (s == "all") return TestSampleSelector::all();
  if (s == "daily_min") return TestSampleSelector::daily_min();
  if (s == "daily_max") return TestSampleSelector::daily_max();
  constexpr std::string_view prefix = "hours:";
  if (s.starts_with(prefix)) {
    std::vector<int> hours;
    std::string_view rest = s.substr(prefix.size());
    while (!rest.empty()) {
      const auto comma = rest.find(',');
      const std::string_view item = rest.substr(0, comma);
      int h = -1;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), h);
      if (ec != std::errc{} || ptr != item.data() + item.size() || h < 0 || h > 23) {
        throw ValidationError("invalid hour '" + std::string(item) + "' in test sample selector");
      }
      hours.push_back(h);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (hours.empty()) throw ValidationError("hours: selector needs at least one hour");
    return TestSampleSelector::fixed_hours(std::move(hours));
  }
  throw ValidationError("unknown test sample selector '" + std::string(s) + "'");
}

inline std::string to_string(const TestSampleSelector& sel) {
  switch (sel.mode) {
    case TestSampleSelector::Mode::daily_min: return "daily_min";
    case TestSampleSelector::Mode::daily_max: return "daily_max";
    case TestSampleSelector::Mode::all: return "all";
    case TestSampleSelector::Mode::fixed_hours: {
      std::string out = "hours:";
      for (std::size_t i = 0; i < sel.hours.size(); ++i) {
        if (i) out += ',';
        out += std::to_string(sel.hours[i]);
      }
      return out;
    }
  }
  return "all";
}

/// Indices of the samples under test, ascending. Extremum modes return at most
/// one index per local day (ties go to the earliest hour) and skip days where
/// more than half of the 24 hours are missing.
inline std::vector<std::size_t> select_test_samples(const LabeledSeries& series,
                                                    const TestSampleSelector& selector,
                                                    int utc_offset_hours = 0) {
  using namespace std::chrono;
  if (series.values.empty()) throw DataError("cannot select test samples from an empty series");

  std::vector<std::size_t> out;
  if (selector.mode == TestSampleSelector::Mode::all) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (series.values[i]) out.push_back(i);
    }
    return out;
  }
  if (selector.mode == TestSampleSelector::Mode::fixed_hours) {
    for (std::size_t i = 0; i < series.size(); ++i) {
      if (!series.values[i]) continue;
      const int hour = series.hour_of_day(i, utc_offset_hours);
      if (std::find(selector.hours.begin(), selector.hours.end(), hour) != selector.hours.end()) {
        out.push_back(i);
      }
    }
    return out;
  }

  const bool want_min = selector.mode == TestSampleSelector::Mode::daily_min;
  std::size_t i = 0;
  while (i < series.size()) {
    const auto day = floor<days>(series.time_at(i) + hours(utc_offset_hours));
    std::size_t present = 0;
    std::optional<std::size_t> best;
    for (; i < series.size() && floor<days>(series.time_at(i) + hours(utc_offset_hours)) == day; ++i) {
      const auto& v = series.values[i];
      if (!v) continue;
      ++present;
      if (!best || (want_min ? *v < *series.values[*best] : *v > *series.values[*best])) best = i;
    }
    if (best && present * 2 >= 24) out.push_back(*best);
  }
  return out;
}

}  // namespace sensorqc
