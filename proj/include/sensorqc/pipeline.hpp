#pragma once

// Calibrate -> filter -> classify, shared by the CLI and the benchmark.

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sensorqc/calibration.hpp"
#include "sensorqc/detection.hpp"
#include "sensorqc/errors.hpp"
#include "sensorqc/kalman.hpp"
#include "sensorqc/model.hpp"
#include "sensorqc/noise.hpp"
#include "sensorqc/series.hpp"

namespace sensorqc {

struct Calibration {
  NoiseEstimate noise;
  StateSpaceModel model;
  FilterState state;
};

/// Noise estimation and initial state from a calibration window. Gaps in the
/// primary window are linearly interpolated before computing f0.
inline Calibration calibrate(std::span<const std::optional<double>> primary,
                             std::optional<std::span<const std::optional<double>>> secondary,
                             const ModelConfig& config, int start_hour_of_day) {
  config.validate();
  if (secondary.has_value() != (config.stream_count == 2)) {
    throw ValidationError("stream_count is " + std::to_string(config.stream_count) + " but " +
                          (secondary ? "a secondary" : "no secondary") + " stream was supplied");
  }
  if (primary.size() % static_cast<std::size_t>(config.period_tau) != 0) {
    throw DataError("calibration length T=" + std::to_string(primary.size()) +
                    " is not divisible by period_tau=" + std::to_string(config.period_tau));
  }
  if (secondary && secondary->size() != primary.size()) {
    throw DataError("secondary calibration window length differs from primary");
  }
  Calibration c;
  c.noise = estimate_noise(primary, secondary, config);
  c.model = assemble_model(config, c.noise);
  CalibrationWindow window{fill_gaps_linear(primary, kMaxCalibrationGapFraction), start_hour_of_day};
  c.state = init_state(window, c.model, config);
  return c;
}

struct PredictionPoint {
  double mean = 0.0;
  double std = 0.0;
};

struct ScreeningResult {
  std::vector<Verdict> verdicts;
  std::vector<PredictionPoint> predictions;  // one per input step
  FilterState final_state;
};

/// Runs the filter over `stream`, classifying the primary value of every step
/// marked in `is_test` against its one-step-ahead prediction. With
/// reject_suspects_from_update, suspect primary values are left out of the update.
/// Verdict indices are offset by `index_offset`; timestamps start at `start`.
inline ScreeningResult screen_stream(const FilterState& initial, const StateSpaceModel& model,
                                     std::span<const ObservationVector> stream, const std::vector<bool>& is_test,
                                     const ModelConfig& config, Timestamp start, std::size_t index_offset = 0,
                                     const std::vector<bool>* truth = nullptr) {
  if (is_test.size() != stream.size()) throw ValidationError("test mask length differs from stream length");
  if (truth && truth->size() != stream.size()) {
    throw ValidationError("truth label length differs from stream length");
  }
  ScreeningResult out;
  out.predictions.reserve(stream.size());

  const ObservationScreen screen = [&](std::size_t i, const Prediction& pred, const ObservationVector& obs) {
    out.predictions.push_back({pred.mu_obs, pred.std_obs()});
    if (!is_test[i] || !obs.primary) return obs;
    Verdict v = classify(*obs.primary, pred, config.p_threshold);
    v.index = index_offset + i;
    v.sample_time = start + kHour * static_cast<long>(i);
    if (truth) v.truth = (*truth)[i];
    const bool reject = config.reject_suspects_from_update && v.label == Label::Suspect;
    out.verdicts.push_back(v);
    if (!reject) return obs;
    ObservationVector reduced = obs;
    reduced.primary.reset();
    return reduced;
  };

  out.final_state = filter_stream(
      initial, model, stream, [](std::size_t, const Prediction&, const FilterState&) {},
      KalmanOptions{config.joseph_form}, screen);
  return out;
}

/// Pairs a single series into observation vectors with no secondary stream.
inline std::vector<ObservationVector> to_observations(const LabeledSeries& primary) {
  std::vector<ObservationVector> out(primary.size());
  for (std::size_t i = 0; i < primary.size(); ++i) out[i].primary = primary.values[i];
  return out;
}

}  // namespace sensorqc
