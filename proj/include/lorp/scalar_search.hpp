#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "lorp/error.hpp"

namespace lorp {

template <typename Scalar>
struct LogGridMinimum {
  Scalar argmin = 0;
  Scalar value = 0;
  /// Sum of |f(t_{i+1}) - f(t_i)| over the grid.
  Scalar total_variation = 0;
  std::size_t grid_index = 0;
  int golden_iterations = 0;
};

/// Global minimum of f on [lo, hi]: evaluate on a logarithmic grid, then
/// refine by golden-section search in log-coordinates around the best grid
/// point until the bracket's relative width is at most rel_tol. Unimodality
/// is only assumed between the two grid neighbours of the best point.
template <typename Scalar, typename F>
LogGridMinimum<Scalar> minimize_log_grid(F&& f, Scalar lo, Scalar hi, Scalar rel_tol,
                                         std::size_t grid_points = 128) {
  using std::exp;
  using std::log;
  require(lo > 0 && hi > lo && std::isfinite(static_cast<double>(hi)), ErrorKind::InvalidInput,
          "log-grid bounds must satisfy 0 < lo < hi < inf");
  require(rel_tol > 0, ErrorKind::InvalidInput, "rel_tol must be positive");
  if (grid_points < 2) grid_points = 2;

  const Scalar log_lo = log(lo);
  const Scalar log_hi = log(hi);
  const Scalar step = (log_hi - log_lo) / static_cast<Scalar>(grid_points - 1);

  std::vector<Scalar> t(grid_points);
  std::vector<Scalar> v(grid_points);
  LogGridMinimum<Scalar> out;
  std::size_t best = 0;
  for (std::size_t i = 0; i < grid_points; ++i) {
    t[i] = (i + 1 == grid_points) ? log_hi : log_lo + step * static_cast<Scalar>(i);
    v[i] = f(exp(t[i]));
    if (i > 0) out.total_variation += std::abs(v[i] - v[i - 1]);
    if (v[i] < v[best]) best = i;
  }
  out.grid_index = best;

  Scalar a = t[best == 0 ? 0 : best - 1];
  Scalar b = t[best + 1 == grid_points ? best : best + 1];
  const Scalar inv_phi = (std::sqrt(Scalar(5)) - 1) / 2;
  Scalar c = b - inv_phi * (b - a);
  Scalar d = a + inv_phi * (b - a);
  Scalar fc = f(exp(c));
  Scalar fd = f(exp(d));
  // exp(b - a) - 1 is the relative width of the bracket in the original variable.
  while (std::expm1(b - a) > rel_tol && out.golden_iterations < 500) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(exp(d));
    }
    ++out.golden_iterations;
  }

  const Scalar mid = (a + b) / 2;
  const Scalar fmid = f(exp(mid));
  out.argmin = exp(mid);
  out.value = fmid;
  if (fc < out.value) {
    out.argmin = exp(c);
    out.value = fc;
  }
  if (fd < out.value) {
    out.argmin = exp(d);
    out.value = fd;
  }
  if (v[best] < out.value) {
    out.argmin = exp(t[best]);
    out.value = v[best];
  }
  return out;
}

}  // namespace lorp
