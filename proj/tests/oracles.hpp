#pragma once

// Reference computations used as test oracles. Nothing here calls the
// recursive filter; everything is brute force over small dense systems.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "sensorqc/sensorqc.hpp"

namespace oracle {

using sensorqc::Matrix;
using sensorqc::Vector;

struct Moments {
  Vector mean;
  Matrix cov;
};

// Filtered moments p(h_k | observations 1..k) for every k, by building the
// joint Gaussian of (h_1..h_n, v_1..v_n) from the independent sources
// (h_0, w_1..w_n, e_1..e_n) and conditioning directly.
inline std::vector<Moments> batch_filtered(const sensorqc::StateSpaceModel& m, const Vector& f0,
                                           const Matrix& F0,
                                           const std::vector<sensorqc::ObservationVector>& obs) {
  const Eigen::Index h = m.latent_dim();
  const Eigen::Index v = m.stream_count();
  const auto n = static_cast<Eigen::Index>(obs.size());
  const Eigen::Index nz = h + n * h + n * v;

  Vector mz = Vector::Zero(nz);
  Matrix cz = Matrix::Zero(nz, nz);
  mz.head(h) = f0;
  cz.topLeftCorner(h, h) = F0;
  for (Eigen::Index t = 0; t < n; ++t) {
    cz.block(h + t * h, h + t * h, h, h) = m.sigma_h;
    cz.block(h + n * h + t * v, h + n * h + t * v, v, v) = m.sigma_v;
  }

  // Rows: h_1..h_n then v_1..v_n.
  Matrix lin = Matrix::Zero(n * h + n * v, nz);
  Matrix prev = Matrix::Zero(h, nz);
  prev.leftCols(h) = Matrix::Identity(h, h);
  for (Eigen::Index t = 0; t < n; ++t) {
    Matrix cur = m.A * prev;
    cur.block(0, h + t * h, h, h) += Matrix::Identity(h, h);
    lin.block(t * h, 0, h, nz) = cur;
    Matrix vis = m.B * cur;
    vis.block(0, h + n * h + t * v, v, v) += Matrix::Identity(v, v);
    lin.block(n * h + t * v, 0, v, nz) = vis;
    prev = cur;
  }
  const Vector mean = lin * mz;
  const Matrix cov = lin * cz * lin.transpose();

  std::vector<Moments> out;
  for (Eigen::Index k = 0; k < n; ++k) {
    std::vector<Eigen::Index> rows;
    std::vector<double> vals;
    for (Eigen::Index t = 0; t <= k; ++t) {
      const auto& o = obs[static_cast<std::size_t>(t)];
      if (o.primary) {
        rows.push_back(n * h + t * v);
        vals.push_back(*o.primary);
      }
      if (o.secondary) {
        rows.push_back(n * h + t * v + 1);
        vals.push_back(*o.secondary);
      }
    }
    const Vector mh = mean.segment(k * h, h);
    const Matrix chh = cov.block(k * h, k * h, h, h);
    if (rows.empty()) {
      out.push_back({mh, chh});
      continue;
    }
    const auto r = static_cast<Eigen::Index>(rows.size());
    Matrix coo(r, r), cho(h, r);
    Vector dv(r);
    for (Eigen::Index i = 0; i < r; ++i) {
      dv(i) = vals[static_cast<std::size_t>(i)] - mean(rows[static_cast<std::size_t>(i)]);
      cho.col(i) = cov.block(k * h, rows[static_cast<std::size_t>(i)], h, 1);
      for (Eigen::Index j = 0; j < r; ++j) {
        coo(i, j) = cov(rows[static_cast<std::size_t>(i)], rows[static_cast<std::size_t>(j)]);
      }
    }
    const Eigen::LDLT<Matrix> solver(coo);
    out.push_back({mh + cho * solver.solve(dv), chh - cho * solver.solve(cho.transpose())});
  }
  return out;
}

inline Matrix random_spd(Eigen::Index n, std::mt19937_64& rng, double lo = 0.1, double hi = 2.0) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix q = Matrix::NullaryExpr(n, n, [&] { return g(rng); });
  const Eigen::HouseholderQR<Matrix> qr(q);
  const Matrix orth = qr.householderQ();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = u(rng);
  return orth * d.asDiagonal() * orth.transpose();
}

// Either the seasonal DLM of period H or a random dense model, with
// random SPD process noise and diagonal measurement noise.
inline sensorqc::StateSpaceModel random_model(std::mt19937_64& rng, int max_h = 4) {
  std::uniform_int_distribution<int> hd(1, max_h), vd(1, 2), kind(0, 1);
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 2.0);
  const int h = hd(rng);
  const int v = vd(rng);
  Matrix a;
  Matrix b;
  if (h >= 2 && kind(rng) == 0) {
    a = sensorqc::build_transition_matrix(h);
    b = sensorqc::build_measurement_matrix(v, h);
  } else {
    a = Matrix::NullaryExpr(h, h, [&] { return u(rng); });
    const double radius = a.eigenvalues().cwiseAbs().maxCoeff();
    if (radius > 1.0) a /= radius;
    b = Matrix::NullaryExpr(v, h, [&] { return u(rng); });
  }
  Matrix sv = Matrix::Zero(v, v);
  for (int i = 0; i < v; ++i) sv(i, i) = pos(rng);
  return sensorqc::StateSpaceModel::from_matrices(a, b, random_spd(h, rng), sv);
}

inline std::vector<sensorqc::ObservationVector> random_observations(std::size_t n, int v, std::mt19937_64& rng,
                                                                   double gap_probability = 0.2) {
  std::normal_distribution<double> g(0.0, 3.0);
  std::bernoulli_distribution gap(gap_probability);
  std::vector<sensorqc::ObservationVector> out(n);
  for (auto& o : out) {
    if (!gap(rng)) o.primary = g(rng);
    if (v == 2 && !gap(rng)) o.secondary = g(rng);
  }
  return out;
}

// Draws a trajectory from the model itself, starting from N(f0, F0).
inline std::vector<sensorqc::ObservationVector> simulate(const sensorqc::StateSpaceModel& m, const Vector& f0,
                                                        const Matrix& F0, std::size_t n, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  auto draw = [&](const Matrix& cov) {
    const Eigen::LLT<Matrix> llt(cov);
    Vector z(cov.rows());
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = g(rng);
    return Vector(llt.matrixL() * z);
  };
  Vector state = f0 + draw(F0);
  std::vector<sensorqc::ObservationVector> out(n);
  for (auto& o : out) {
    state = m.A * state + draw(m.sigma_h);
    const Vector vis = m.B * state + draw(m.sigma_v);
    o.primary = vis(0);
    if (vis.size() > 1) o.secondary = vis(1);
  }
  return out;
}

// Scalar Kalman recursion written out by hand.
struct Scalar {
  double mean;
  double var;
};
inline std::vector<Scalar> scalar_kalman(double a, double b, double q, double r, double f0, double p0,
                                         const std::vector<double>& xs) {
  std::vector<Scalar> out;
  double f = f0, p = p0;
  for (double x : xs) {
    const double mp = a * f;
    const double pp = a * a * p + q;
    const double s = b * b * pp + r;
    const double k = pp * b / s;
    f = mp + k * (x - b * mp);
    p = (1.0 - k * b) * pp;
    out.push_back({f, p});
  }
  return out;
}

}  // namespace oracle
