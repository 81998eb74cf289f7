#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <string_view>

#include "sensorqc/errors.hpp"
#include "sensorqc/kalman.hpp"
#include "sensorqc/series.hpp"

namespace sensorqc {

enum class Label { Valid, Suspect };

inline std::string_view to_string(Label l) { return l == Label::Suspect ? "suspect" : "valid"; }

struct Verdict {
  Timestamp sample_time{};
  std::size_t index = 0;
  double observed = 0.0;
  double predicted_mean = 0.0;
  double predicted_std = 0.0;
  double p_value = 1.0;
  Label label = Label::Valid;
  // Ground truth in benchmark mode: true when the sample was perturbed.
  std::optional<bool> truth;

  bool operator==(const Verdict&) const = default;
};

inline double standard_normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

/// 1 - 2|0.5 - Phi((x - mu)/sigma)|, evaluated as erfc(|z|/sqrt 2) so that
/// small tail probabilities keep full relative precision.
inline double p_value_two_sided(double x, double mu, double var) {
  if (!(var > 0.0)) throw ValidationError("predictive variance must be > 0");
  const double z = (x - mu) / std::sqrt(var);
  return std::erfc(std::abs(z) / std::numbers::sqrt2);
}

inline Verdict classify(double x, const Prediction& prediction, double threshold) {
  Verdict v;
  v.observed = x;
  v.predicted_mean = prediction.mu_obs;
  v.predicted_std = prediction.std_obs();
  v.p_value = p_value_two_sided(x, prediction.mu_obs, prediction.var_obs);
  v.label = v.p_value < threshold ? Label::Suspect : Label::Valid;
  return v;
}

}  // namespace sensorqc
