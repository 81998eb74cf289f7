#pragma once

// Dynamic linear model: a random-walk level plus a free-form seasonal block,
// observed through one (station) or two (station + forecast) streams.
//
//   h_t = A h_{t-1} + eta_h,   eta_h ~ N(0, sigma_h)
//   v_t = B h_t     + eta_v,   eta_v ~ N(0, sigma_v)

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sensorqc/errors.hpp"

namespace sensorqc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

struct ModelConfig {
  int period_tau = 24;
  int stream_count = 1;
  double process_noise_scale = 0.8;
  double prior_cov_scale = 5.0;
  double p_threshold = 0.1;
  double tpws_noise_floor = 0.7;
  double nwp_noise_multiplier = 1.5;
  bool seasonal_demean = true;
  bool reject_suspects_from_update = false;
  bool joseph_form = false;
  int highpass_order = 3;
  // Cut-off is highpass_cutoff_cycles / period_tau cycles per hour.
  double highpass_cutoff_cycles = 5.0;
  int calibration_days = 28;
  int utc_offset_hours = 0;

  void validate() const {
    if (period_tau < 2) {
      throw ValidationError("period_tau must be >= 2, got " + std::to_string(period_tau));
    }
    if (stream_count != 1 && stream_count != 2) {
      throw ValidationError("stream_count must be 1 or 2, got " + std::to_string(stream_count));
    }
    if (!(p_threshold > 0.0 && p_threshold < 1.0)) {
      throw ValidationError("p_threshold must lie in (0, 1)");
    }
    if (!(process_noise_scale > 0.0)) throw ValidationError("process_noise_scale must be > 0");
    if (!(prior_cov_scale > 0.0)) throw ValidationError("prior_cov_scale must be > 0");
    if (!(tpws_noise_floor > 0.0)) throw ValidationError("tpws_noise_floor must be > 0");
    if (!(nwp_noise_multiplier > 0.0)) throw ValidationError("nwp_noise_multiplier must be > 0");
    if (highpass_order < 1) throw ValidationError("highpass_order must be >= 1");
    if (!(highpass_cutoff_cycles > 0.0)) throw ValidationError("highpass_cutoff_cycles must be > 0");
    if (calibration_days < 1) throw ValidationError("calibration_days must be >= 1");
    if (utc_offset_hours < -23 || utc_offset_hours > 23) {
      throw ValidationError("utc_offset_hours must lie in [-23, 23]");
    }
  }

  double highpass_cutoff() const { return highpass_cutoff_cycles / period_tau; }
};

/// Per-stream noise levels after flooring. epsilon_y is present only for two streams.
struct NoiseEstimate {
  double epsilon_x = 0.0;
  std::optional<double> epsilon_y;
  // Unfloored standard deviations of the high-passed streams.
  double raw_x = 0.0;
  std::optional<double> raw_y;

  bool x_floor_active() const { return raw_x < epsilon_x; }
  bool y_floor_active() const { return raw_y && epsilon_y && *raw_y < *epsilon_y; }
};

struct StateSpaceModel {
  Matrix A;
  Matrix B;
  RowVector C;
  Matrix sigma_h;
  Matrix sigma_v;

  Eigen::Index latent_dim() const { return A.rows(); }
  Eigen::Index stream_count() const { return B.rows(); }

  /// Builds a model from arbitrary matrices; C is the first row of B.
  static StateSpaceModel from_matrices(Matrix a, Matrix b, Matrix sigma_h, Matrix sigma_v) {
    if (a.rows() != a.cols()) throw ValidationError("A must be square");
    if (b.cols() != a.rows()) throw ValidationError("B must have H columns");
    if (sigma_h.rows() != a.rows() || sigma_h.cols() != a.rows()) {
      throw ValidationError("sigma_h must be H x H");
    }
    if (sigma_v.rows() != b.rows() || sigma_v.cols() != b.rows()) {
      throw ValidationError("sigma_v must be V x V");
    }
    StateSpaceModel m;
    m.C = b.row(0);
    m.A = std::move(a);
    m.B = std::move(b);
    m.sigma_h = std::move(sigma_h);
    m.sigma_v = std::move(sigma_v);
    return m;
  }

  /// FNV-1a over dimensions and the raw bytes of every matrix. Used to tie
  /// saved filter states to the model they were produced with.
  std::uint64_t hash() const {
    std::uint64_t h = 14695981039346656037ull;
    auto mix_bytes = [&h](const void* data, std::size_t n) {
      const auto* p = static_cast<const unsigned char*>(data);
      for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
      }
    };
    auto mix_matrix = [&](const Matrix& m) {
      const std::int64_t dims[2] = {m.rows(), m.cols()};
      mix_bytes(dims, sizeof dims);
      mix_bytes(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
    };
    mix_matrix(A);
    mix_matrix(B);
    mix_matrix(sigma_h);
    mix_matrix(sigma_v);
    return h;
  }
};

/// Level state followed by a free-form seasonal block of period tau:
/// row 0 keeps the level, row 1 is the negated sum of the previous tau-1
/// seasonal effects, rows 2..H-1 shift the seasonal history by one.
inline Matrix build_transition_matrix(int period_tau) {
  if (period_tau < 2) {
    throw ValidationError("period_tau must be >= 2, got " + std::to_string(period_tau));
  }
  const Eigen::Index h = period_tau;
  Matrix a = Matrix::Zero(h, h);
  a(0, 0) = 1.0;
  for (Eigen::Index j = 1; j < h; ++j) a(1, j) = -1.0;
  for (Eigen::Index i = 2; i < h; ++i) a(i, i - 1) = 1.0;
  return a;
}

/// Every stream observes level + current seasonal effect.
inline Matrix build_measurement_matrix(int stream_count, int latent_dim) {
  if (stream_count != 1 && stream_count != 2) {
    throw ValidationError("stream_count must be 1 or 2, got " + std::to_string(stream_count));
  }
  if (latent_dim < 2) throw ValidationError("latent dimension must be >= 2");
  Matrix b = Matrix::Zero(stream_count, latent_dim);
  b.leftCols(2).setOnes();
  return b;
}

inline StateSpaceModel assemble_model(const ModelConfig& config, const NoiseEstimate& noise) {
  config.validate();
  const bool has_y = noise.epsilon_y.has_value();
  if (has_y != (config.stream_count == 2)) {
    throw ValidationError("noise estimate has " + std::to_string(has_y ? 2 : 1) +
                          " stream(s) but stream_count is " + std::to_string(config.stream_count));
  }
  if (!(noise.epsilon_x > 0.0) || (has_y && !(*noise.epsilon_y > 0.0))) {
    throw ValidationError("noise levels must be strictly positive");
  }
  if (noise.epsilon_x < config.tpws_noise_floor) {
    throw ValidationError("epsilon_x is below the station noise floor");
  }
  if (has_y && *noise.epsilon_y < config.nwp_noise_multiplier * noise.epsilon_x * (1.0 - 1e-12)) {
    throw ValidationError("epsilon_y is below the forecast noise floor");
  }

  const double vx = noise.epsilon_x * noise.epsilon_x;
  double min_var = vx;
  Matrix sigma_v = Matrix::Zero(config.stream_count, config.stream_count);
  sigma_v(0, 0) = vx;
  if (has_y) {
    const double vy = *noise.epsilon_y * *noise.epsilon_y;
    sigma_v(1, 1) = vy;
    min_var = std::min(vx, vy);
  }

  const Eigen::Index h = config.period_tau;
  Matrix sigma_h = Matrix::Identity(h, h) * (config.process_noise_scale * min_var);
  return StateSpaceModel::from_matrices(build_transition_matrix(config.period_tau),
                                        build_measurement_matrix(config.stream_count, config.period_tau),
                                        std::move(sigma_h), std::move(sigma_v));
}

}  // namespace sensorqc
