#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <string>
#include <variant>
#include <vector>

#include "lorp/error.hpp"

namespace lorp {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using Index = Eigen::Index;

// Regressor families. Each alternative carries its complexity parameter.
struct Knn {
  int k = 1;
};
struct KnnPrime {
  int k = 1;
};
struct GaussianKernel {
  double sigma = 1.0;
};
/// Basis 1, x, ..., x^{d-1}; d = 0 is the zero regressor.
struct Polynomial {
  int d = 0;
};
/// Least squares on a named feature map of the covariates ("linear": [1, x]).
struct Lbfr {
  std::string feature_map = "linear";
};
/// Hat matrix supplied directly (tests, fixtures).
struct Explicit {
  std::string label = "explicit";
};

using RegressorSpec = std::variant<Knn, KnnPrime, GaussianKernel, Polynomial, Lbfr, Explicit>;

inline std::string label(const RegressorSpec& spec) {
  struct Visitor {
    std::string operator()(const Knn& s) const { return "knn:k=" + std::to_string(s.k); }
    std::string operator()(const KnnPrime& s) const { return "knnprime:k=" + std::to_string(s.k); }
    std::string operator()(const GaussianKernel& s) const {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "kernel:sigma=%.6g", s.sigma);
      return buf;
    }
    std::string operator()(const Polynomial& s) const { return "poly:d=" + std::to_string(s.d); }
    std::string operator()(const Lbfr& s) const { return "lbfr:map=" + s.feature_map; }
    std::string operator()(const Explicit& s) const { return s.label; }
  };
  return std::visit(Visitor{}, spec);
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& m) {
  return m.derived().array().isFinite().all();
}

template <typename Scalar = double>
struct Dataset {
  Matrix<Scalar> x;  // n observations x m covariates
  Vector<Scalar> y;
  std::vector<std::string> x_names;
  std::string y_name = "y";

  Dataset() = default;
  Dataset(Matrix<Scalar> x_in, Vector<Scalar> y_in) : x(std::move(x_in)), y(std::move(y_in)) {
    validate();
  }

  Index n() const { return y.size(); }
  Index m() const { return x.cols(); }

  void validate() const {
    require(x.rows() == y.size(), ErrorKind::InvalidInput, "row count of x differs from length of y");
    require(y.size() >= 2, ErrorKind::InvalidInput, "dataset needs at least 2 observations");
    require(all_finite(x) && all_finite(y), ErrorKind::InvalidInput, "dataset has non-finite entries");
  }
};

template <typename Scalar = double>
struct HatMatrix {
  Matrix<Scalar> entries;
  RegressorSpec spec = Explicit{};
  /// Numerical rank of the feature matrix for least-squares regressors, -1 otherwise.
  Index rank = -1;

  HatMatrix() = default;
  explicit HatMatrix(Matrix<Scalar> m, RegressorSpec s = Explicit{}, Index r = -1)
      : entries(std::move(m)), spec(std::move(s)), rank(r) {
    validate();
  }

  Index n() const { return entries.rows(); }

  void validate() const {
    require(entries.rows() == entries.cols(), ErrorKind::InvalidInput, "hat matrix must be square");
    require(all_finite(entries), ErrorKind::InvalidInput, "hat matrix has non-finite entries");
  }
};

}  // namespace lorp
