#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensorqc/errors.hpp"
#include "sensorqc/model.hpp"

namespace sensorqc {

/// Filtered posterior N(f, F) after assimilating `t` timesteps.
struct FilterState {
  Vector f;
  Matrix F;
  long t = 0;
};

/// One-step-ahead predictive moments, latent and in observation space.
struct Prediction {
  double mu_obs = 0.0;
  double var_obs = 0.0;
  Vector mu_latent;
  Matrix cov_latent;
  Vector mu_v;
  Matrix cov_v;

  double std_obs() const { return std::sqrt(var_obs); }
};

/// Station value x_t and optional forecast value y_t; absent entries are gaps.
struct ObservationVector {
  std::optional<double> primary;
  std::optional<double> secondary;

  bool empty() const { return !primary && !secondary; }
};

struct KalmanOptions {
  bool joseph_form = false;
};

inline Prediction predict(const FilterState& state, const StateSpaceModel& model) {
  Prediction p;
  p.mu_latent = model.A * state.f;
  p.cov_latent = model.A * state.F * model.A.transpose() + model.sigma_h;
  p.mu_v = model.B * p.mu_latent;
  p.cov_v = model.B * p.cov_latent * model.B.transpose() + model.sigma_v;
  p.mu_obs = model.C.dot(p.mu_latent);
  p.var_obs = model.C * p.cov_latent * model.C.transpose() + model.sigma_v(0, 0);
  return p;
}

inline FilterState update(const FilterState& state, const StateSpaceModel& model,
                          const ObservationVector& obs, const Prediction& prediction,
                          const KalmanOptions& options = {}) {
  if (obs.secondary && model.stream_count() < 2) {
    throw ValidationError("secondary observation supplied to a single-stream model");
  }

  // Rows of B / sigma_v that carry an observation this step.
  std::vector<Eigen::Index> rows;
  std::vector<double> values;
  if (obs.primary) {
    rows.push_back(0);
    values.push_back(*obs.primary);
  }
  if (obs.secondary) {
    rows.push_back(1);
    values.push_back(*obs.secondary);
  }

  FilterState next;
  next.t = state.t + 1;
  if (rows.empty()) {
    next.f = prediction.mu_latent;
    next.F = 0.5 * (prediction.cov_latent + prediction.cov_latent.transpose());
    return next;
  }

  const auto m = static_cast<Eigen::Index>(rows.size());
  const Eigen::Index h = model.latent_dim();
  Matrix b(m, h);
  Matrix r(m, m);
  Vector v(m);
  Vector mu_v(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    b.row(i) = model.B.row(rows[static_cast<std::size_t>(i)]);
    v(i) = values[static_cast<std::size_t>(i)];
    mu_v(i) = prediction.mu_v(rows[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m; ++j) {
      r(i, j) = model.sigma_v(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
    }
  }

  const Matrix& s_hh = prediction.cov_latent;
  const Matrix s_hv = s_hh * b.transpose();  // H x m
  const Matrix s_vv = b * s_hv + r;
  const Eigen::LLT<Matrix> llt(s_vv);
  if (llt.info() != Eigen::Success) {
    throw NumericalError("innovation covariance is not positive definite");
  }
  // K = S_hv S_vv^-1, computed as (S_vv^-1 S_hv^T)^T.
  const Matrix gain = llt.solve(s_hv.transpose()).transpose();
  if (!gain.allFinite()) throw NumericalError("Kalman gain is not finite");

  next.f = prediction.mu_latent + gain * (v - mu_v);
  const Matrix i_kb = Matrix::Identity(h, h) - gain * b;
  if (options.joseph_form) {
    next.F = i_kb * s_hh * i_kb.transpose() + gain * r * gain.transpose();
  } else {
    next.F = i_kb * s_hh;
  }
  next.F = 0.5 * (next.F + next.F.transpose()).eval();
  return next;
}

struct FilterStep {
  Prediction prediction;
  FilterState state;
};

/// Optional hook that sees each one-step-ahead prediction before the update
/// and may return a reduced observation (e.g. dropping a suspect value).
using ObservationScreen =
    std::function<ObservationVector(std::size_t index, const Prediction&, const ObservationVector&)>;

/// Streams the recursion, calling on_step(index, prediction, updated_state)
/// for every timestep. Returns the final state.
template <typename OnStep>
FilterState filter_stream(const FilterState& initial, const StateSpaceModel& model,
                          std::span<const ObservationVector> stream, OnStep&& on_step,
                          const KalmanOptions& options = {}, const ObservationScreen& screen = {}) {
  FilterState state = initial;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const Prediction pred = predict(state, model);
    const ObservationVector obs = screen ? screen(i, pred, stream[i]) : stream[i];
    try {
      state = update(state, model, obs, pred, options);
    } catch (const NumericalError& e) {
      throw NumericalError("timestep " + std::to_string(i) + ": " + e.what());
    }
    on_step(i, pred, state);
  }
  return state;
}

inline std::vector<FilterStep> run_filter(const FilterState& initial, const StateSpaceModel& model,
                                          std::span<const ObservationVector> stream,
                                          const KalmanOptions& options = {},
                                          const ObservationScreen& screen = {}) {
  std::vector<FilterStep> out;
  out.reserve(stream.size());
  filter_stream(
      initial, model, stream,
      [&out](std::size_t, const Prediction& p, const FilterState& s) { out.push_back({p, s}); }, options,
      screen);
  return out;
}

}  // namespace sensorqc
