#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "sensorqc/errors.hpp"

namespace sensorqc::humidity {

inline constexpr double kOffset = 1.8096;
inline constexpr double kSlope = 17.2694;
inline constexpr double kPole = 237.3;

struct RelativeHumidity {
  double percent = 0.0;
  bool clamped = false;
};

namespace detail {
inline void check_temperature(double t, const char* what) {
  if (!(t > -kPole)) throw ValidationError(std::string(what) + " must be above -237.3 C");
}
inline double exponent(double t) { return kOffset + kSlope * t / (kPole + t); }
}  // namespace detail

/// Unclamped RH (percent) from dew point and dry-bulb temperature in Celsius.
inline double dew_point_to_rh_raw(double dew_point_c, double dry_bulb_c) {
  detail::check_temperature(dew_point_c, "dew point");
  detail::check_temperature(dry_bulb_c, "dry-bulb temperature");
  return 100.0 * std::exp(detail::exponent(dew_point_c) - detail::exponent(dry_bulb_c));
}

/// RH clamped to [0, 100]; `clamped` is set for supersaturated input.
inline RelativeHumidity dew_point_to_rh(double dew_point_c, double dry_bulb_c) {
  const double raw = dew_point_to_rh_raw(dew_point_c, dry_bulb_c);
  return {std::clamp(raw, 0.0, 100.0), raw > 100.0};
}

inline double rh_to_dew_point(double rh_percent, double dry_bulb_c) {
  if (!(rh_percent > 0.0)) throw ValidationError("relative humidity must be > 0");
  if (rh_percent > 100.0) throw ValidationError("relative humidity must be <= 100");
  detail::check_temperature(dry_bulb_c, "dry-bulb temperature");
  const double g = std::log(rh_percent / 100.0) / kSlope + dry_bulb_c / (kPole + dry_bulb_c);
  return kPole * g / (1.0 - g);
}

/// d RH / d dew point at (dew_point_c, dry_bulb_c), unclamped.
inline double rh_sensitivity(double dew_point_c, double dry_bulb_c) {
  return dew_point_to_rh_raw(dew_point_c, dry_bulb_c) * kSlope * kPole /
         ((kPole + dew_point_c) * (kPole + dew_point_c));
}

}  // namespace sensorqc::humidity
