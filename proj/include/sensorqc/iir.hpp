#pragma once

// Butterworth high-pass design (bilinear transform with pre-warping) and
// zero-phase forward/backward application.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sensorqc/errors.hpp"

namespace sensorqc {

struct IIRFilterSpec {
  int order = 0;
  double cutoff_cycles_per_hour = 0.0;
  double sample_interval_hours = 1.0;
  // Coefficients of z^0, z^-1, ..., z^-order; denominator[0] == 1.
  std::vector<double> numerator;
  std::vector<double> denominator;
  std::vector<std::complex<double>> poles;
};

namespace detail {

// Expands prod_k (1 - r_k z^-1) into real coefficients of z^0..z^-n.
inline std::vector<double> poly_from_roots(const std::vector<std::complex<double>>& roots) {
  std::vector<std::complex<double>> c{1.0};
  for (const auto& r : roots) {
    std::vector<std::complex<double>> next(c.size() + 1, 0.0);
    for (std::size_t i = 0; i < c.size(); ++i) {
      next[i] += c[i];
      next[i + 1] -= r * c[i];
    }
    c = std::move(next);
  }
  std::vector<double> out(c.size());
  for (std::size_t i = 0; i < c.size(); ++i) out[i] = c[i].real();
  return out;
}

}  // namespace detail

inline IIRFilterSpec design_highpass(int order, double cutoff_cycles_per_hour,
                                     double sample_interval_hours = 1.0) {
  if (order < 1) throw ValidationError("filter order must be >= 1");
  if (!(sample_interval_hours > 0.0)) throw ValidationError("sample interval must be > 0");
  const double nyquist = 0.5 / sample_interval_hours;
  if (!(cutoff_cycles_per_hour > 0.0) || !(cutoff_cycles_per_hour < nyquist)) {
    throw ValidationError("cut-off " + std::to_string(cutoff_cycles_per_hour) +
                          " cycles/hour must lie strictly between 0 and Nyquist (" +
                          std::to_string(nyquist) + ")");
  }

  using cplx = std::complex<double>;
  constexpr double pi = std::numbers::pi;
  const double fs = 1.0 / sample_interval_hours;
  const double warped = 2.0 * fs * std::tan(pi * cutoff_cycles_per_hour * sample_interval_hours);

  std::vector<cplx> z_poles;
  z_poles.reserve(static_cast<std::size_t>(order));
  for (int k = 0; k < order; ++k) {
    const cplx proto = std::polar(1.0, pi * (2.0 * k + order + 1) / (2.0 * order));
    const cplx s = warped / proto;  // low-pass prototype -> high-pass
    z_poles.push_back((2.0 * fs + s) / (2.0 * fs - s));
  }
  const std::vector<cplx> z_zeros(static_cast<std::size_t>(order), cplx{1.0, 0.0});

  IIRFilterSpec spec;
  spec.order = order;
  spec.cutoff_cycles_per_hour = cutoff_cycles_per_hour;
  spec.sample_interval_hours = sample_interval_hours;
  spec.numerator = detail::poly_from_roots(z_zeros);
  spec.denominator = detail::poly_from_roots(z_poles);
  spec.poles = z_poles;

  // Unit gain at Nyquist (z = -1).
  cplx num{0.0}, den{0.0};
  double sign = 1.0;
  for (int i = 0; i <= order; ++i) {
    num += sign * spec.numerator[static_cast<std::size_t>(i)];
    den += sign * spec.denominator[static_cast<std::size_t>(i)];
    sign = -sign;
  }
  const double gain = std::abs(den) / std::abs(num);
  for (auto& b : spec.numerator) b *= gain;
  return spec;
}

/// H(e^{j 2 pi f dt}) for f in cycles per hour.
inline std::complex<double> frequency_response(const IIRFilterSpec& spec, double freq_cycles_per_hour) {
  const double w = 2.0 * std::numbers::pi * freq_cycles_per_hour * spec.sample_interval_hours;
  const std::complex<double> zinv = std::polar(1.0, -w);
  std::complex<double> num{0.0}, den{0.0}, zk{1.0};
  for (std::size_t i = 0; i < spec.numerator.size(); ++i) {
    num += spec.numerator[i] * zk;
    den += spec.denominator[i] * zk;
    zk *= zinv;
  }
  return num / den;
}

inline double gain_db(const IIRFilterSpec& spec, double freq_cycles_per_hour) {
  return 20.0 * std::log10(std::abs(frequency_response(spec, freq_cycles_per_hour)));
}

inline bool is_stable(const IIRFilterSpec& spec) {
  for (const auto& p : spec.poles) {
    if (!(std::abs(p) < 1.0)) return false;
  }
  return true;
}

/// Initial state of the transposed direct-form II filter that gives the
/// steady-state response to a unit step.
inline std::vector<double> steady_state_initial(const IIRFilterSpec& spec) {
  const auto n = static_cast<Eigen::Index>(spec.denominator.size()) - 1;
  const auto& a = spec.denominator;
  const auto& b = spec.numerator;
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    m(i, 0) += a[static_cast<std::size_t>(i + 1)];
    if (i + 1 < n) m(i, i + 1) -= 1.0;
  }
  Eigen::VectorXd rhs(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    rhs(i) = b[static_cast<std::size_t>(i + 1)] - a[static_cast<std::size_t>(i + 1)] * b[0];
  }
  const Eigen::VectorXd zi = m.partialPivLu().solve(rhs);
  return {zi.data(), zi.data() + n};
}

/// Single causal pass, transposed direct-form II, starting from `state`.
inline std::vector<double> filter_forward(const IIRFilterSpec& spec, std::span<const double> x,
                                          std::vector<double> state) {
  const auto& b = spec.numerator;
  const auto& a = spec.denominator;
  const std::size_t n = a.size() - 1;
  state.resize(n, 0.0);
  std::vector<double> y(x.size());
  for (std::size_t t = 0; t < x.size(); ++t) {
    const double out = b[0] * x[t] + (n > 0 ? state[0] : 0.0);
    for (std::size_t i = 0; i + 1 < n; ++i) {
      state[i] = b[i + 1] * x[t] + state[i + 1] - a[i + 1] * out;
    }
    if (n > 0) state[n - 1] = b[n] * x[t] - a[n] * out;
    y[t] = out;
  }
  return y;
}

/// Zero-phase filtering: odd-reflection padding of 3*order samples at each end,
/// a forward pass and a backward pass, each started from the steady state of
/// its first sample. Output length equals input length.
inline std::vector<double> apply_filter(const IIRFilterSpec& spec, std::span<const double> series) {
  const std::size_t pad = 3 * static_cast<std::size_t>(spec.order);
  const std::size_t min_len = 4 * static_cast<std::size_t>(spec.order);
  if (series.size() < min_len || series.size() <= pad) {
    throw DataError("series of length " + std::to_string(series.size()) +
                    " is too short for an order-" + std::to_string(spec.order) + " filter (need >= " +
                    std::to_string(std::max(min_len, pad + 1)) + ")");
  }
  const std::size_t n = series.size();
  std::vector<double> ext;
  ext.reserve(n + 2 * pad);
  for (std::size_t k = pad; k >= 1; --k) ext.push_back(2.0 * series[0] - series[k]);
  ext.insert(ext.end(), series.begin(), series.end());
  for (std::size_t k = 1; k <= pad; ++k) ext.push_back(2.0 * series[n - 1] - series[n - 1 - k]);

  const std::vector<double> zi = steady_state_initial(spec);
  auto scaled = [&zi](double x0) {
    std::vector<double> s(zi);
    for (auto& v : s) v *= x0;
    return s;
  };

  std::vector<double> fwd = filter_forward(spec, ext, scaled(ext.front()));
  std::reverse(fwd.begin(), fwd.end());
  std::vector<double> bwd = filter_forward(spec, fwd, scaled(fwd.front()));
  std::reverse(bwd.begin(), bwd.end());
  return {bwd.begin() + static_cast<std::ptrdiff_t>(pad), bwd.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

}  // namespace sensorqc
