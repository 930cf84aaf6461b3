#pragma once

// Shared generators and independent reference computations for the tests.

#include <cmath>
#include <random>

#include <Eigen/Dense>

#include "lorp/types.hpp"

namespace lorp::test {

inline Matrix<double> mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix<double> m(static_cast<Index>(rows.size()), static_cast<Index>(rows.begin()->size()));
  Index i = 0;
  for (const auto& r : rows) {
    Index j = 0;
    for (double v : r) m(i, j++) = v;
    ++i;
  }
  return m;
}

inline Vector<double> vec(std::initializer_list<double> values) {
  Vector<double> v(static_cast<Index>(values.size()));
  Index i = 0;
  for (double x : values) v[i++] = x;
  return v;
}

inline Matrix<double> gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Matrix<double> m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = nd(rng);
  return m;
}

inline Vector<double> gaussian_vector(Index n, std::mt19937_64& rng) { return gaussian_matrix(n, 1, rng).col(0); }

// Orthogonal projection onto a random d-dimensional subspace, built by QR
// (independent of the SVD route used by the library).
inline Matrix<double> random_projection(Index n, Index d, std::mt19937_64& rng) {
  if (d == 0) return Matrix<double>::Zero(n, n);
  const Matrix<double> g = gaussian_matrix(n, d, rng);
  Eigen::HouseholderQR<Matrix<double>> qr(g);
  const Matrix<double> q = qr.householderQ() * Matrix<double>::Identity(n, d);
  return q * q.transpose();
}

inline Matrix<double> random_spd(Index n, std::mt19937_64& rng, double floor = 0.2) {
  const Matrix<double> g = gaussian_matrix(n, n, rng);
  return g * g.transpose() / static_cast<double>(n) + floor * Matrix<double>::Identity(n, n);
}

// Dense log-determinant by LU, as an oracle for eigenvalue-based code.
inline double dense_logdet(const Matrix<double>& m) {
  Eigen::PartialPivLU<Matrix<double>> lu(m);
  const Vector<double> diag = lu.matrixLU().diagonal();
  double s = 0;
  for (Index i = 0; i < diag.size(); ++i) s += std::log(std::abs(diag[i]));
  return s;
}

// log of the n-ball volume by the recurrence v_n = v_{n-2} 2 pi / n.
inline double log_ball_volume(Index n) {
  double v = n % 2 == 0 ? 1.0 : 2.0;
  for (Index k = n % 2 == 0 ? 2 : 3; k <= n; k += 2) v *= 2.0 * M_PI / static_cast<double>(k);
  return std::log(v);
}

// (n/2) log(y^T S y) - (1/2) log det S, straight from the dense matrix.
inline double dense_loss_rank(const Matrix<double>& s, const Vector<double>& y) {
  return static_cast<double>(y.size()) / 2 * std::log(y.dot(s * y)) - dense_logdet(s) / 2;
}

inline bool close(double a, double b, double rel, double abs_tol = 0) {
  return std::abs(a - b) <= abs_tol + rel * std::max(1.0, std::max(std::abs(a), std::abs(b)));
}

}  // namespace lorp::test
