#pragma once

// Independent reference implementations used to check the library. They share
// no code with src/ beyond the value types.

#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "elastic_ds/core.hpp"
#include "elastic_ds/lpvds.hpp"

namespace oracle {

using elastic_ds::Components;
using elastic_ds::Mat;
using elastic_ds::Points;
using elastic_ds::Pose;
using elastic_ds::Vec;

// Dense path-graph Laplacian: L_ii = 1, L_ij = -1/deg(i) for neighbours.
inline Eigen::MatrixXd dense_laplacian(int m) {
  Eigen::MatrixXd l = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    const int deg = (i > 0) + (i + 1 < m);
    l(i, i) = 1.0;
    if (i > 0) l(i, i - 1) = -1.0 / deg;
    if (i + 1 < m) l(i, i + 1) = -1.0 / deg;
  }
  return l;
}

// Equality-constrained least squares min ||L b - L b0||^2 s.t. pinned rows,
// solved through the full KKT system per coordinate.
inline Points kkt_edit(const Points& joints0, const std::optional<Pose>& o_start, const std::optional<Pose>& o_end) {
  const int m = static_cast<int>(joints0.size());
  const int d = static_cast<int>(joints0.front().size());
  std::vector<std::pair<int, Vec>> pins;
  if (o_start) {
    const double l0 = (joints0[1] - joints0[0]).norm();
    pins.emplace_back(0, o_start->position);
    pins.emplace_back(1, Vec(o_start->position + l0 * o_start->rotation.col(0)));
  }
  if (o_end) {
    const double ln = (joints0[m - 1] - joints0[m - 2]).norm();
    pins.emplace_back(m - 1, o_end->position);
    pins.emplace_back(m - 2, Vec(o_end->position - ln * o_end->rotation.col(0)));
  }
  const int c = static_cast<int>(pins.size());
  const Eigen::MatrixXd l = dense_laplacian(m);
  Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(m + c, m + c);
  kkt.topLeftCorner(m, m) = 2.0 * l.transpose() * l;
  for (int r = 0; r < c; ++r) {
    kkt(m + r, pins[r].first) = 1.0;
    kkt(pins[r].first, m + r) = 1.0;
  }
  Points out(m, Vec::Zero(d));
  for (int k = 0; k < d; ++k) {
    Eigen::VectorXd b0(m);
    for (int i = 0; i < m; ++i) b0(i) = joints0[i](k);
    Eigen::VectorXd rhs(m + c);
    rhs.head(m) = 2.0 * l.transpose() * (l * b0);
    for (int r = 0; r < c; ++r) rhs(m + r) = pins[r].second(k);
    const Eigen::VectorXd sol = kkt.fullPivLu().solve(rhs);
    for (int i = 0; i < m; ++i) out[i](k) = sol(i);
  }
  return out;
}

// Responsibilities straight from the mixture definition, in long double.
inline std::vector<double> responsibilities(const Components& comps, const Vec& x) {
  const int d = static_cast<int>(x.size());
  std::vector<long double> w(comps.size());
  long double total = 0.0L;
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> s = comps[k].covariance.cast<long double>();
    const Eigen::Matrix<long double, Eigen::Dynamic, 1> diff = (x - comps[k].mean).cast<long double>();
    const long double q = diff.dot(s.inverse() * diff);
    const long double norm = std::pow(2.0L * 3.14159265358979323846264338327950288L, d / 2.0L) * std::sqrt(s.determinant());
    w[k] = static_cast<long double>(comps[k].prior) * std::exp(-0.5L * q) / norm;
    total += w[k];
  }
  std::vector<double> out(comps.size());
  for (std::size_t k = 0; k < comps.size(); ++k) out[k] = static_cast<double>(w[k] / total);
  return out;
}

// f(x) = sum_k gamma_k(x) (A_k x + b_k) with b_k = -A_k x*.
inline Vec evaluate(const Components& comps, const std::vector<Mat>& a, const Vec& attractor, const Vec& x) {
  const auto g = oracle::responsibilities(comps, x);
  Eigen::Matrix<long double, Eigen::Dynamic, 1> f = Eigen::Matrix<long double, Eigen::Dynamic, 1>::Zero(x.size());
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic> ak = a[k].cast<long double>();
    f += static_cast<long double>(g[k]) * (ak * x.cast<long double>() - ak * attractor.cast<long double>());
  }
  return f.cast<double>();
}

inline Mat random_rotation(int d, std::mt19937_64& rng) {
  std::normal_distribution<double> n;
  Mat m(d, d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = n(rng);
  Eigen::HouseholderQR<Mat> qr(m);
  Mat q = qr.householderQ();
  if (q.determinant() < 0) q.col(0) = -q.col(0);
  return q;
}

inline Mat random_spd(int d, std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec ev(d);
  for (int i = 0; i < d; ++i) ev(i) = u(rng);
  const Mat r = random_rotation(d, rng);
  return r * ev.asDiagonal() * r.transpose();
}

}  // namespace oracle
