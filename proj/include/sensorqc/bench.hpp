#pragma once

// End-to-end synthetic benchmark: generate stations, perturb test samples,
// calibrate, filter, classify and pool the confusion counts.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sensorqc/errors.hpp"
#include "sensorqc/humidity.hpp"
#include "sensorqc/metrics.hpp"
#include "sensorqc/pipeline.hpp"
#include "sensorqc/sampling.hpp"
#include "sensorqc/synthetic.hpp"

namespace sensorqc {

enum class Profile { temperature, humidity, wind };

inline std::string_view to_string(Profile p) {
  switch (p) {
    case Profile::temperature: return "temperature";
    case Profile::humidity: return "humidity";
    case Profile::wind: return "wind";
  }
  return "temperature";
}

inline Profile parse_profile(std::string_view s) {
  if (s == "temperature") return Profile::temperature;
  if (s == "humidity") return Profile::humidity;
  if (s == "wind") return Profile::wind;
  throw ValidationError("unknown profile '" + std::string(s) + "' (expected temperature|humidity|wind)");
}

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  double draw(std::mt19937_64& rng) const {
    return lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(rng);
  }
};

/// Distribution of synthetic station parameters; each station draws its own.
struct StationPopulation {
  Range level;
  Range diurnal_amplitude;
  Range noise_std;
  Range ar_coefficient;
  Range nwp_bias{0.0, 0.0};
  Range nwp_noise_std{0.0, 0.0};
};

struct ProfileSpec {
  Profile profile = Profile::temperature;
  Variable variable = Variable::temperature_c;
  int stream_count = 1;
  TestSampleSelector selector;
  PerturbationSpec perturbation;
  StationPopulation population;
  // Humidity only: dry-bulb temperature used to report in relative humidity.
  std::optional<StationPopulation> dry_bulb;
  int length_days = 730;
};

inline ProfileSpec default_profile(Profile profile) {
  ProfileSpec s;
  s.profile = profile;
  switch (profile) {
    case Profile::temperature:
      s.variable = Variable::temperature_c;
      s.stream_count = 2;
      s.selector = TestSampleSelector::daily_min();
      s.perturbation = {0.027, 2.0, 6.0, PerturbationSpec::Sign::symmetric_two_sided, 0};
      s.population = {{5.0, 25.0}, {3.0, 9.0}, {0.3, 1.6}, {0.2, 0.7}, {-1.0, 1.0}, {0.5, 2.0}};
      break;
    case Profile::humidity:
      s.variable = Variable::dew_point_c;
      s.stream_count = 1;
      s.selector = TestSampleSelector::fixed_hours({9, 15});
      s.perturbation = {0.05, 4.0, 10.0, PerturbationSpec::Sign::symmetric_two_sided, 0};
      s.population = {{3.0, 12.0}, {0.5, 3.0}, {0.5, 1.5}, {0.3, 0.7}};
      s.dry_bulb = StationPopulation{{15.0, 24.0}, {4.0, 8.0}, {0.5, 1.0}, {0.3, 0.6}};
      break;
    case Profile::wind:
      s.variable = Variable::wind_gust_ms;
      s.stream_count = 1;
      s.selector = TestSampleSelector::daily_max();
      s.perturbation = {0.10, 5.0, 14.6, PerturbationSpec::Sign::positive_only, 0};
      s.population = {{8.0, 16.0}, {1.0, 4.0}, {1.0, 3.0}, {0.2, 0.6}};
      break;
  }
  return s;
}

struct BenchOptions {
  Profile profile = Profile::temperature;
  int stations = 100;
  std::uint64_t seed = 1;
  int jobs = 1;
  ModelConfig config;
  std::optional<int> length_days;
};

struct StationOutcome {
  std::string station_id;
  SyntheticStationParams params;
  NoiseEstimate noise;
  ConfusionCounts counts;
  std::vector<Verdict> verdicts;
};

struct BenchResult {
  Profile profile = Profile::temperature;
  MetricsReport metrics;
  std::vector<StationOutcome> stations;
};

inline std::string station_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "station-%03d", index);
  return buf;
}

inline SyntheticStationParams draw_station(const StationPopulation& pop, std::mt19937_64& rng) {
  SyntheticStationParams p;
  p.level = pop.level.draw(rng);
  p.diurnal_amplitude = pop.diurnal_amplitude.draw(rng);
  p.noise_std = pop.noise_std.draw(rng);
  p.ar_coefficient = pop.ar_coefficient.draw(rng);
  p.nwp_bias = pop.nwp_bias.draw(rng);
  p.nwp_noise_std = pop.nwp_noise_std.draw(rng);
  p.seed = rng();
  return p;
}

/// One station of a benchmark. Deterministic in (spec, config, seed, index).
inline StationOutcome run_station(const ProfileSpec& spec, const ModelConfig& base_config,
                                  std::uint64_t seed, int index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), 0x5eed5u};
  std::mt19937_64 rng(seq);

  ModelConfig config = base_config;
  config.stream_count = spec.stream_count;

  StationOutcome out;
  out.station_id = station_name(index);
  out.params = draw_station(spec.population, rng);
  out.params.station_id = out.station_id;
  out.params.variable = spec.variable;
  out.params.length_days = spec.length_days;
  std::optional<SyntheticStationParams> dry_params;
  if (spec.dry_bulb) {
    dry_params = draw_station(*spec.dry_bulb, rng);
    dry_params->station_id = out.station_id;
    dry_params->variable = Variable::temperature_c;
    dry_params->length_days = spec.length_days;
  }
  PerturbationSpec perturbation = spec.perturbation;
  perturbation.seed = rng();

  const StationSeries station = generate_station(out.params);
  const std::size_t calib_len = static_cast<std::size_t>(config.calibration_days) * 24;
  if (station.primary.size() <= calib_len) throw ValidationError("station shorter than calibration window");

  std::vector<std::size_t> tests = select_test_samples(station.primary, spec.selector, config.utc_offset_hours);
  std::erase_if(tests, [calib_len](std::size_t i) { return i < calib_len; });
  const LabeledSeries perturbed = perturb(station.primary, tests, perturbation);

  using OptSpan = std::span<const std::optional<double>>;
  const OptSpan primary_all(perturbed.values);
  std::optional<OptSpan> secondary_calib;
  if (spec.stream_count == 2) secondary_calib = OptSpan(station.secondary.values).first(calib_len);
  const Calibration calib = calibrate(primary_all.first(calib_len), secondary_calib, config,
                                      perturbed.hour_of_day(0, config.utc_offset_hours));
  out.noise = calib.noise;

  const std::size_t n = perturbed.size() - calib_len;
  std::vector<ObservationVector> stream(n);
  std::vector<bool> test_mask(n, false);
  std::vector<bool> truth(n, false);
  for (std::size_t i = 0; i < n; ++i) {
    stream[i].primary = perturbed.values[calib_len + i];
    if (spec.stream_count == 2) stream[i].secondary = station.secondary.values[calib_len + i];
    truth[i] = (*perturbed.truth_labels)[calib_len + i];
  }
  for (auto i : tests) test_mask[i - calib_len] = true;

  ScreeningResult screened = screen_stream(calib.state, calib.model, stream, test_mask, config,
                                           perturbed.time_at(calib_len), calib_len, &truth);

  for (const auto& v : screened.verdicts) out.counts.add(v.truth.value_or(false), v.label == Label::Suspect);

  if (dry_params) {
    // Report in relative humidity; the test itself ran in dew-point space.
    const StationSeries dry = generate_station(*dry_params);
    for (auto& v : screened.verdicts) {
      const double ta = *dry.primary.values[v.index];
      const double slope = humidity::rh_sensitivity(v.predicted_mean, ta);
      v.observed = humidity::dew_point_to_rh(v.observed, ta).percent;
      v.predicted_std = std::abs(slope) * v.predicted_std;
      v.predicted_mean = humidity::dew_point_to_rh(v.predicted_mean, ta).percent;
    }
  }
  out.verdicts = std::move(screened.verdicts);
  return out;
}

inline BenchResult run_benchmark(const ProfileSpec& spec, const BenchOptions& options) {
  options.config.validate();
  if (options.stations < 1) throw ValidationError("stations must be >= 1");

  const auto count = static_cast<std::size_t>(options.stations);
  std::vector<std::optional<StationOutcome>> outcomes(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};

  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        outcomes[i] = run_station(spec, options.config, options.seed, static_cast<int>(i));
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int jobs = std::clamp(options.jobs, 1, options.stations);
  std::vector<std::thread> pool;
  for (int j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw DataError(station_name(static_cast<int>(i)) + ": " + e.what());
    }
  }

  BenchResult result;
  result.profile = spec.profile;
  std::map<std::string, ConfusionCounts> per_station;
  for (auto& o : outcomes) {
    per_station[o->station_id] = o->counts;
    result.stations.push_back(std::move(*o));
  }
  result.metrics = build_metrics(std::move(per_station));
  return result;
}

inline BenchResult run_benchmark(const BenchOptions& options) {
  ProfileSpec spec = default_profile(options.profile);
  if (options.length_days) spec.length_days = *options.length_days;
  return run_benchmark(spec, options);
}

}  // namespace sensorqc
