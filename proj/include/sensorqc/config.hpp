#pragma once

// Plain-text "key = value" configuration files. Lines starting with '#' are
// comments; unknown keys are rejected.

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>

#include "sensorqc/errors.hpp"
#include "sensorqc/model.hpp"
#include "sensorqc/sampling.hpp"

namespace sensorqc {

struct Settings {
  ModelConfig model;
  TestSampleSelector test_samples = TestSampleSelector::all();
  // Keys that were set explicitly (file or overrides), for precedence checks.
  std::set<std::string> explicit_keys;

  bool is_explicit(const std::string& key) const { return explicit_keys.count(key) != 0; }
};

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not a number");
  }
  return out;
}

inline int to_int(const std::string& key, const std::string& v) {
  int out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size()) {
    throw ValidationError("config key '" + key + "': '" + v + "' is not an integer");
  }
  return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ValidationError("config key '" + key + "': '" + v + "' is not a boolean");
}

}  // namespace detail

/// Applies one key/value pair. Throws ValidationError for unknown keys or bad values.
inline void apply_setting(Settings& s, const std::string& key, const std::string& value) {
  auto& m = s.model;
  if (key == "period_tau") m.period_tau = detail::to_int(key, value);
  else if (key == "stream_count") m.stream_count = detail::to_int(key, value);
  else if (key == "process_noise_scale") m.process_noise_scale = detail::to_double(key, value);
  else if (key == "prior_cov_scale") m.prior_cov_scale = detail::to_double(key, value);
  else if (key == "p_threshold") m.p_threshold = detail::to_double(key, value);
  else if (key == "tpws_noise_floor") m.tpws_noise_floor = detail::to_double(key, value);
  else if (key == "nwp_noise_multiplier") m.nwp_noise_multiplier = detail::to_double(key, value);
  else if (key == "seasonal_demean") m.seasonal_demean = detail::to_bool(key, value);
  else if (key == "reject_suspects_from_update") m.reject_suspects_from_update = detail::to_bool(key, value);
  else if (key == "joseph_form") m.joseph_form = detail::to_bool(key, value);
  else if (key == "highpass_order") m.highpass_order = detail::to_int(key, value);
  else if (key == "highpass_cutoff_cycles") m.highpass_cutoff_cycles = detail::to_double(key, value);
  else if (key == "calibration_days") m.calibration_days = detail::to_int(key, value);
  else if (key == "utc_offset_hours") m.utc_offset_hours = detail::to_int(key, value);
  else if (key == "test_samples") s.test_samples = parse_selector(value);
  else throw ValidationError("unknown config key '" + key + "'");
  s.explicit_keys.insert(key);
}

inline Settings parse_settings(std::istream& in, const std::string& origin = "<config>") {
  Settings s;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    try {
      apply_setting(s, key, value);
    } catch (const ValidationError& e) {
      throw ValidationError(origin + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  s.model.validate();
  return s;
}

inline Settings load_settings(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  return parse_settings(in, path);
}

/// Writes every key with its current value, in the same format parse_settings reads.
inline std::string format_settings(const Settings& s) {
  const auto& m = s.model;
  auto b = [](bool v) { return v ? "true" : "false"; };
  auto d = [](double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
  };
  std::string out;
  out += "period_tau = " + std::to_string(m.period_tau) + "\n";
  out += "stream_count = " + std::to_string(m.stream_count) + "\n";
  out += "process_noise_scale = " + d(m.process_noise_scale) + "\n";
  out += "prior_cov_scale = " + d(m.prior_cov_scale) + "\n";
  out += "p_threshold = " + d(m.p_threshold) + "\n";
  out += "tpws_noise_floor = " + d(m.tpws_noise_floor) + "\n";
  out += "nwp_noise_multiplier = " + d(m.nwp_noise_multiplier) + "\n";
  out += std::string("seasonal_demean = ") + b(m.seasonal_demean) + "\n";
  out += std::string("reject_suspects_from_update = ") + b(m.reject_suspects_from_update) + "\n";
  out += std::string("joseph_form = ") + b(m.joseph_form) + "\n";
  out += "highpass_order = " + std::to_string(m.highpass_order) + "\n";
  out += "highpass_cutoff_cycles = " + d(m.highpass_cutoff_cycles) + "\n";
  out += "calibration_days = " + std::to_string(m.calibration_days) + "\n";
  out += "utc_offset_hours = " + std::to_string(m.utc_offset_hours) + "\n";
  out += "test_samples = " + to_string(s.test_samples) + "\n";
  return out;
}

}  // namespace sensorqc
