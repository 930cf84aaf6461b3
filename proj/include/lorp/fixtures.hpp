#pragma once

#include <array>
#include <string>

#include "lorp/oracle.hpp"
#include "lorp/regressors.hpp"

namespace lorp::fixtures {

// Two points on the diagonal, x = (1, 2), y = (1, 2), fitted by the zero,
// mean and line least-squares regressors (d = 0, 1, 2).

inline Vector<double> simple_x() { return (Vector<double>(2) << 1.0, 2.0).finished(); }
inline Vector<double> simple_y() { return (Vector<double>(2) << 1.0, 2.0).finished(); }

/// Losses of the three regressors written out in closed form.
inline oracle::LossFunction simple_loss(int d) {
  switch (d) {
    case 0: return {"d0: y1^2 + y2^2", [](std::span<const double> y) { return y[0] * y[0] + y[1] * y[1]; }};
    case 1: return {"d1: (y2 - y1)^2 / 2", [](std::span<const double> y) { return 0.5 * (y[1] - y[0]) * (y[1] - y[0]); }};
    case 2: return {"d2: 0", [](std::span<const double>) { return 0.0; }};
    default: fail(ErrorKind::InvalidInput, "simple fixtures have d in {0, 1, 2}");
  }
}

/// The same regressors built as polynomial least-squares hat matrices.
inline HatMatrix<double> simple_hat(int d) {
  require(d >= 0 && d <= 2, ErrorKind::InvalidInput, "simple fixtures have d in {0, 1, 2}");
  return lbfr_matrix<double>(polynomial_design<double>(simple_x(), d), Polynomial{d});
}

/// Discrete response alphabet {0, 1, 2}.
inline std::array<double, 3> simple_values() { return {0.0, 1.0, 2.0}; }

/// Continuous response interval [0, 2]^2.
inline oracle::BoxDomain simple_box() { return oracle::BoxDomain::cube(2, 0.0, 2.0); }

/// Exact loss volumes on [0, 2]^2 at level L.
inline double simple_volume(int d, double level) {
  switch (d) {
    case 0:
      return 2.0 * std::sqrt(std::max(level - 4.0, 0.0)) +
             level * (M_PI / 4.0 - std::acos(std::min(2.0 / std::sqrt(level), 1.0)));
    case 1: return 4.0 * std::sqrt(2.0 * level) - 2.0 * level;
    case 2: return 4.0;
    default: fail(ErrorKind::InvalidInput, "simple fixtures have d in {0, 1, 2}");
  }
}

}  // namespace lorp::fixtures
