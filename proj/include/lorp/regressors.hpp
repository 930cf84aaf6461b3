#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "lorp/types.hpp"

namespace lorp {

struct EuclideanDistance {
  template <typename A, typename B>
  auto operator()(const A& a, const B& b) const {
    return (a - b).norm();
  }
};

/// Feature matrix Phi with Phi(i, a) = phi_a(x_i).
template <typename Scalar>
struct FeatureMatrix {
  Matrix<Scalar> phi;

  Index n() const { return phi.rows(); }
  Index d() const { return phi.cols(); }
};

namespace detail {

// Neighbours of row i: i itself first (it is its own closest neighbour), then
// the others by ascending distance, ties by ascending index.
template <typename Scalar, typename Metric>
std::vector<Index> neighbour_order(const Matrix<Scalar>& x, Index i, const Metric& metric) {
  const Index n = x.rows();
  std::vector<Scalar> dist(n);
  for (Index j = 0; j < n; ++j) dist[j] = metric(x.row(i), x.row(j));
  std::vector<Index> order;
  order.reserve(n);
  for (Index j = 0; j < n; ++j)
    if (j != i) order.push_back(j);
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
  order.insert(order.begin(), i);
  return order;
}

template <typename Scalar, typename Metric>
Matrix<Scalar> neighbour_average(const Matrix<Scalar>& x, int k, bool exclude_self, const Metric& metric) {
  const Index n = x.rows();
  Matrix<Scalar> m = Matrix<Scalar>::Zero(n, n);
  const Scalar weight = Scalar(1) / Scalar(k);
  const Index first = exclude_self ? 1 : 0;
  for (Index i = 0; i < n; ++i) {
    const std::vector<Index> order = neighbour_order<Scalar>(x, i, metric);
    for (Index r = first; r < first + k; ++r) m(i, order[r]) = weight;
  }
  return m;
}

}  // namespace detail

/// k-nearest-neighbour averaging on the training points, self included.
template <typename Scalar, typename Metric = EuclideanDistance>
HatMatrix<Scalar> knn_matrix(const Matrix<Scalar>& x, int k, const Metric& metric = {}) {
  const Index n = x.rows();
  require(k >= 1 && k <= n, ErrorKind::InvalidInput,
          "knn needs 1 <= k <= n (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  return HatMatrix<Scalar>(detail::neighbour_average<Scalar>(x, k, false, metric), Knn{k});
}

/// k nearest neighbours excluding the point itself; the diagonal is zero.
template <typename Scalar, typename Metric = EuclideanDistance>
HatMatrix<Scalar> knn_prime_matrix(const Matrix<Scalar>& x, int k, const Metric& metric = {}) {
  const Index n = x.rows();
  require(k >= 1 && k <= n - 1, ErrorKind::InvalidInput,
          "knn' needs 1 <= k <= n-1 (k=" + std::to_string(k) + ", n=" + std::to_string(n) + ")");
  return HatMatrix<Scalar>(detail::neighbour_average<Scalar>(x, k, true, metric), KnnPrime{k});
}

/// Nadaraya-Watson weights with K(x, x') = exp(-|x - x'|^2 / (2 sigma^2)).
template <typename Scalar>
HatMatrix<Scalar> gaussian_kernel_matrix(const Matrix<Scalar>& x, Scalar sigma) {
  using std::exp;
  require(sigma > 0 && std::isfinite(static_cast<double>(sigma)), ErrorKind::InvalidInput,
          "kernel bandwidth must be positive");
  const Index n = x.rows();
  Matrix<Scalar> m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = (x.row(i) - x.row(j)).squaredNorm();
    // The smallest exponent is 0 (self), so the row sum never underflows.
    const Scalar nearest = m.row(i).minCoeff();
    for (Index j = 0; j < n; ++j) m(i, j) = exp(-(m(i, j) - nearest) / (2 * sigma * sigma));
    m.row(i) /= m.row(i).sum();
  }
  return HatMatrix<Scalar>(std::move(m), GaussianKernel{static_cast<double>(sigma)});
}

/// Vandermonde design: columns 1, x, ..., x^{d-1}.
template <typename Scalar>
FeatureMatrix<Scalar> polynomial_design(const Vector<Scalar>& x, int d) {
  require(d >= 0, ErrorKind::InvalidInput, "polynomial dimension must be nonnegative");
  FeatureMatrix<Scalar> f{Matrix<Scalar>(x.size(), d)};
  for (Index i = 0; i < x.size(); ++i) {
    Scalar power = 1;
    for (int a = 0; a < d; ++a) {
      f.phi(i, a) = power;
      power *= x[i];
    }
  }
  return f;
}

/// Intercept plus every covariate column.
template <typename Scalar>
FeatureMatrix<Scalar> linear_design(const Matrix<Scalar>& x) {
  FeatureMatrix<Scalar> f{Matrix<Scalar>(x.rows(), x.cols() + 1)};
  f.phi.col(0).setOnes();
  f.phi.rightCols(x.cols()) = x;
  return f;
}

/// Least-squares hat matrix Phi B^+ Phi^T, i.e. the orthogonal projection onto
/// the column space of Phi. Singular values below rank_tol * max are dropped.
template <typename Scalar>
HatMatrix<Scalar> lbfr_matrix(const FeatureMatrix<Scalar>& features, RegressorSpec spec = Explicit{"lbfr"},
                              Scalar rank_tol = Scalar(1e-10)) {
  const Index n = features.n();
  require(all_finite(features.phi), ErrorKind::InvalidInput, "feature matrix has non-finite entries");
  if (features.d() == 0) return HatMatrix<Scalar>(Matrix<Scalar>::Zero(n, n), std::move(spec), 0);

  Eigen::JacobiSVD<Matrix<Scalar>> svd(features.phi, Eigen::ComputeThinU);
  const Vector<Scalar>& sv = svd.singularValues();
  Index rank = 0;
  const Scalar cutoff = rank_tol * (sv.size() ? sv[0] : Scalar(0));
  for (Index i = 0; i < sv.size(); ++i)
    if (sv[i] > cutoff) ++rank;
  const Matrix<Scalar> u = svd.matrixU().leftCols(rank);
  Matrix<Scalar> m = u * u.transpose();
  m = Scalar(0.5) * (m + m.transpose()).eval();
  return HatMatrix<Scalar>(std::move(m), std::move(spec), rank);
}

/// Hat matrix for any registered family on the covariates x.
template <typename Scalar>
HatMatrix<Scalar> build_hat_matrix(const RegressorSpec& spec, const Matrix<Scalar>& x) {
  struct Visitor {
    const Matrix<Scalar>& x;
    HatMatrix<Scalar> operator()(const Knn& s) const { return knn_matrix<Scalar>(x, s.k); }
    HatMatrix<Scalar> operator()(const KnnPrime& s) const { return knn_prime_matrix<Scalar>(x, s.k); }
    HatMatrix<Scalar> operator()(const GaussianKernel& s) const {
      return gaussian_kernel_matrix<Scalar>(x, Scalar(s.sigma));
    }
    HatMatrix<Scalar> operator()(const Polynomial& s) const {
      require(x.cols() == 1, ErrorKind::InvalidInput, "polynomial regression needs a single covariate");
      return lbfr_matrix<Scalar>(polynomial_design<Scalar>(x.col(0), s.d), s);
    }
    HatMatrix<Scalar> operator()(const Lbfr& s) const {
      require(s.feature_map == "linear", ErrorKind::InvalidInput, "unknown feature map '" + s.feature_map + "'");
      return lbfr_matrix<Scalar>(linear_design<Scalar>(x), s);
    }
    HatMatrix<Scalar> operator()(const Explicit&) const {
      fail(ErrorKind::InvalidInput, "explicit regressors have no construction rule");
    }
  };
  return std::visit(Visitor{x}, spec);
}

/// Off-training-data prediction r(x_new | x, y). Not used by loss-rank
/// selection, which only needs the hat matrix on the training points.
template <typename Scalar>
Vector<Scalar> predict(const RegressorSpec& spec, const Matrix<Scalar>& x, const Vector<Scalar>& y,
                       const Matrix<Scalar>& x_new) {
  const Index n = x.rows();
  require(y.size() == n && x_new.cols() == x.cols(), ErrorKind::InvalidInput, "prediction shape mismatch");
  Vector<Scalar> out(x_new.rows());

  if (const auto* s = std::get_if<Knn>(&spec)) {
    require(s->k >= 1 && s->k <= n, ErrorKind::InvalidInput, "knn needs 1 <= k <= n");
    for (Index q = 0; q < x_new.rows(); ++q) {
      std::vector<Index> order(n);
      std::iota(order.begin(), order.end(), Index(0));
      std::vector<Scalar> dist(n);
      for (Index j = 0; j < n; ++j) dist[j] = (x_new.row(q) - x.row(j)).norm();
      std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return dist[a] < dist[b]; });
      Scalar sum = 0;
      for (int r = 0; r < s->k; ++r) sum += y[order[r]];
      out[q] = sum / Scalar(s->k);
    }
    return out;
  }
  if (const auto* s = std::get_if<GaussianKernel>(&spec)) {
    const Scalar sigma = Scalar(s->sigma);
    require(sigma > 0, ErrorKind::InvalidInput, "kernel bandwidth must be positive");
    for (Index q = 0; q < x_new.rows(); ++q) {
      Vector<Scalar> d2(n);
      for (Index j = 0; j < n; ++j) d2[j] = (x_new.row(q) - x.row(j)).squaredNorm();
      const Vector<Scalar> w = (-(d2.array() - d2.minCoeff()) / (2 * sigma * sigma)).exp();
      out[q] = w.dot(y) / w.sum();
    }
    return out;
  }
  if (const auto* s = std::get_if<Polynomial>(&spec)) {
    require(x.cols() == 1, ErrorKind::InvalidInput, "polynomial regression needs a single covariate");
    if (s->d == 0) return Vector<Scalar>::Zero(x_new.rows());
    const FeatureMatrix<Scalar> train = polynomial_design<Scalar>(x.col(0), s->d);
    const FeatureMatrix<Scalar> query = polynomial_design<Scalar>(x_new.col(0), s->d);
    const Vector<Scalar> w = train.phi.completeOrthogonalDecomposition().solve(y);
    return query.phi * w;
  }
  fail(ErrorKind::InvalidInput, "prediction is not provided for " + label(spec));
}

}  // namespace lorp
