#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensorqc/errors.hpp"
#include "sensorqc/iir.hpp"
#include "sensorqc/model.hpp"

namespace sensorqc {

inline constexpr double kMaxCalibrationGapFraction = 0.2;

inline double gap_fraction(std::span<const std::optional<double>> values) {
  if (values.empty()) return 0.0;
  const auto gaps = std::count_if(values.begin(), values.end(), [](const auto& v) { return !v; });
  return static_cast<double>(gaps) / static_cast<double>(values.size());
}

/// Linear interpolation across interior gaps; leading and trailing gaps take
/// the nearest present value.
inline std::vector<double> fill_gaps_linear(std::span<const std::optional<double>> values,
                                            double max_gap_fraction = 1.0) {
  const double frac = gap_fraction(values);
  if (frac > max_gap_fraction) {
    throw DataError("gap fraction " + std::to_string(frac) + " exceeds the allowed " +
                    std::to_string(max_gap_fraction));
  }
  std::vector<double> out(values.size());
  std::optional<std::size_t> prev;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i]) continue;
    out[i] = *values[i];
    if (!prev) {
      for (std::size_t j = 0; j < i; ++j) out[j] = out[i];
    } else if (*prev + 1 < i) {
      const double x0 = out[*prev];
      const double x1 = out[i];
      const double span_len = static_cast<double>(i - *prev);
      for (std::size_t j = *prev + 1; j < i; ++j) {
        out[j] = x0 + (x1 - x0) * static_cast<double>(j - *prev) / span_len;
      }
    }
    prev = i;
  }
  if (!prev) throw DataError("series contains no observations");
  for (std::size_t j = *prev + 1; j < values.size(); ++j) out[j] = out[*prev];
  return out;
}

inline double population_std(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / n);
}

/// Standard deviation of the high-passed, gap-filled stream.
inline double highpass_std(std::span<const std::optional<double>> series, const ModelConfig& config) {
  const auto filled = fill_gaps_linear(series, kMaxCalibrationGapFraction);
  const auto spec = design_highpass(config.highpass_order, config.highpass_cutoff());
  const auto filtered = apply_filter(spec, filled);
  return population_std(filtered);
}

inline NoiseEstimate estimate_noise(std::span<const std::optional<double>> primary,
                                    std::optional<std::span<const std::optional<double>>> secondary,
                                    const ModelConfig& config) {
  config.validate();
  const auto min_len = static_cast<std::size_t>(2 * config.period_tau);
  auto check = [&](std::span<const std::optional<double>> s, const char* name) {
    if (s.size() < min_len) {
      throw DataError(std::string(name) + " calibration window has " + std::to_string(s.size()) +
                      " samples; at least 2*period_tau = " + std::to_string(min_len) + " required");
    }
    if (gap_fraction(s) > kMaxCalibrationGapFraction) {
      throw DataError(std::string(name) + " calibration window has more than 20% gaps");
    }
  };
  check(primary, "primary");
  if (secondary) check(*secondary, "secondary");

  NoiseEstimate est;
  est.raw_x = highpass_std(primary, config);
  est.epsilon_x = std::max(est.raw_x, config.tpws_noise_floor);
  if (secondary) {
    est.raw_y = highpass_std(*secondary, config);
    est.epsilon_y = std::max(*est.raw_y, config.nwp_noise_multiplier * est.epsilon_x);
  }
  return est;
}

}  // namespace sensorqc
