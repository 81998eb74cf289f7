#pragma once

#include <numeric>
#include <string>
#include <vector>

#include "sensorqc/errors.hpp"
#include "sensorqc/kalman.hpp"
#include "sensorqc/model.hpp"

namespace sensorqc {

/// Gap-free hourly calibration samples of length T (a multiple of tau, at least 2 tau).
struct CalibrationWindow {
  std::vector<double> samples;
  int start_hour_of_day = 0;
};

/// Mean of the calibration samples at each position within the period,
/// indexed by offset from the window start (slot 0 is the first sample).
inline std::vector<double> slot_means(const std::vector<double>& samples, int period_tau) {
  const auto tau = static_cast<std::size_t>(period_tau);
  std::vector<double> sums(tau, 0.0);
  for (std::size_t t = 0; t < samples.size(); ++t) sums[t % tau] += samples[t];
  const double cycles = static_cast<double>(samples.size() / tau);
  for (auto& s : sums) s /= cycles;
  return sums;
}

/// Initial filtered moments from a calibration window.
///
/// f0[0] is the window mean. The seasonal block holds the slot means ordered
/// as the transition matrix expects at the last calibration sample: f0[1] is
/// the slot of the final sample, f0[2] the slot before it, and so on, so the
/// first prediction after the window lands on slot 0. When seasonal_demean is
/// set the level is subtracted from the seasonal entries. F0 is
/// prior_cov_scale * sigma_h.
inline FilterState init_state(const CalibrationWindow& window, const StateSpaceModel& model,
                              const ModelConfig& config) {
  const int tau = config.period_tau;
  const std::size_t total = window.samples.size();
  if (total % static_cast<std::size_t>(tau) != 0) {
    throw DataError("calibration length T=" + std::to_string(total) +
                    " is not divisible by period_tau=" + std::to_string(tau));
  }
  if (total < 2 * static_cast<std::size_t>(tau)) {
    throw DataError("calibration length T=" + std::to_string(total) + " is shorter than 2*period_tau=" +
                    std::to_string(2 * tau));
  }
  if (window.start_hour_of_day < 0 || window.start_hour_of_day > 23) {
    throw ValidationError("start_hour_of_day must lie in [0, 23]");
  }
  if (model.latent_dim() != tau) {
    throw ValidationError("model latent dimension does not match period_tau");
  }

  const double level =
      std::accumulate(window.samples.begin(), window.samples.end(), 0.0) / static_cast<double>(total);
  const auto slots = slot_means(window.samples, tau);

  FilterState s;
  s.f = Vector::Zero(tau);
  s.f(0) = level;
  for (int j = 1; j < tau; ++j) {
    const double slot_mean = slots[static_cast<std::size_t>(tau - j)];
    s.f(j) = config.seasonal_demean ? slot_mean - level : slot_mean;
  }
  s.F = config.prior_cov_scale * model.sigma_h;
  s.t = 0;
  return s;
}

/// Hour-of-day of the slot with offset `slot` from the window start.
inline int slot_hour_of_day(const CalibrationWindow& window, int slot) {
  return (window.start_hour_of_day + slot) % 24;
}

}  // namespace sensorqc
