#pragma once

// Synthetic hourly stations and ground-truth perturbation injection.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <numbers>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "sensorqc/errors.hpp"
#include "sensorqc/series.hpp"

namespace sensorqc {

struct SyntheticStationParams {
  std::string station_id = "synthetic";
  Variable variable = Variable::temperature_c;
  double level = 15.0;
  double diurnal_amplitude = 8.0;
  double noise_std = 1.0;
  double ar_coefficient = 0.3;
  double nwp_bias = 0.0;
  double nwp_noise_std = 1.0;
  int length_days = 730;
  std::uint64_t seed = 1;
  // Midnight UTC, 2017-01-01.
  Timestamp start = Timestamp{std::chrono::sys_days{std::chrono::year{2017} / 1 / 1}};

  void validate() const {
    if (noise_std < 0.0 || nwp_noise_std < 0.0 || diurnal_amplitude < 0.0) {
      throw ValidationError("synthetic station standard deviations and amplitude must be >= 0");
    }
    if (!(ar_coefficient >= 0.0 && ar_coefficient < 1.0)) {
      throw ValidationError("ar_coefficient must lie in [0, 1)");
    }
    if (length_days < 30) throw ValidationError("length_days must be >= 30");
  }
};

struct StationSeries {
  LabeledSeries primary;    // station stream x_t
  LabeledSeries secondary;  // forecast stream y_t
};

/// x_t = level + A sin(2 pi hour/24) + AR(1) noise;
/// y_t = level + A sin(2 pi hour/24) + bias + white noise.
inline StationSeries generate_station(const SyntheticStationParams& p) {
  p.validate();
  std::mt19937_64 rng(p.seed);
  std::normal_distribution<double> innovation(0.0, 1.0);

  const auto n = static_cast<std::size_t>(p.length_days) * 24;
  StationSeries out;
  out.primary.station_id = p.station_id;
  out.primary.variable = p.variable;
  out.primary.start = p.start;
  out.primary.values.resize(n);
  out.secondary = out.primary;

  double ar_state = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const int hour = out.primary.hour_of_day(t);
    const double clean = p.level + p.diurnal_amplitude * std::sin(2.0 * std::numbers::pi * hour / 24.0);
    ar_state = p.ar_coefficient * ar_state + p.noise_std * innovation(rng);
    out.primary.values[t] = clean + ar_state;
    out.secondary.values[t] = clean + p.nwp_bias + p.nwp_noise_std * innovation(rng);
  }
  return out;
}

struct PerturbationSpec {
  enum class Sign { symmetric_two_sided, positive_only };
  double target_fraction = 0.027;
  double magnitude_low = 2.0;
  double magnitude_high = 6.0;
  Sign sign_mode = Sign::symmetric_two_sided;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(target_fraction > 0.0 && target_fraction < 1.0)) {
      throw ValidationError("target_fraction must lie in (0, 1)");
    }
    if (!(magnitude_low > 0.0 && magnitude_low < magnitude_high)) {
      throw ValidationError("perturbation magnitudes must satisfy 0 < low < high");
    }
  }
};

/// Adds offsets drawn from U(low, high) (negated with probability 1/2 in
/// symmetric mode) to a uniformly random subset of round(fraction * count)
/// present test samples, and sets the truth labels of exactly those samples.
inline LabeledSeries perturb(const LabeledSeries& series, const std::vector<std::size_t>& test_indices,
                             const PerturbationSpec& spec) {
  spec.validate();
  std::vector<std::size_t> eligible;
  eligible.reserve(test_indices.size());
  for (auto i : test_indices) {
    if (i >= series.size()) throw ValidationError("test index out of range");
    if (series.values[i]) eligible.push_back(i);
  }
  LabeledSeries out = series;
  if (!out.truth_labels) out.truth_labels = std::vector<bool>(series.size(), false);

  std::mt19937_64 rng(spec.seed);
  const auto k = static_cast<std::size_t>(
      std::llround(spec.target_fraction * static_cast<double>(eligible.size())));
  std::vector<std::size_t> chosen;
  chosen.reserve(k);
  std::sample(eligible.begin(), eligible.end(), std::back_inserter(chosen), k, rng);

  std::uniform_real_distribution<double> magnitude(spec.magnitude_low, spec.magnitude_high);
  std::bernoulli_distribution negate(0.5);
  for (auto i : chosen) {
    double offset = magnitude(rng);
    if (spec.sign_mode == PerturbationSpec::Sign::symmetric_two_sided && negate(rng)) offset = -offset;
    *out.values[i] += offset;
    (*out.truth_labels)[i] = true;
  }
  return out;
}

}  // namespace sensorqc
