#pragma once

#include <cmath>
#include <optional>
#include <vector>

#include "lorp/core.hpp"

namespace lorp {

/// Relative entropy between Bernoulli(p) and Bernoulli(q), with 0 log 0 = 0.
template <typename Scalar>
Scalar kl_bernoulli(Scalar p, Scalar q) {
  using std::log;
  require(p >= 0 && p <= 1, ErrorKind::InvalidInput, "p must lie in [0, 1]");
  require(q >= 0 && q <= 1, ErrorKind::InvalidInput, "q must lie in [0, 1]");
  Scalar kl = 0;
  if (p > 0) {
    require(q > 0, ErrorKind::InfiniteDivergence, "KL(p||0) with p > 0");
    kl += p * log(p / q);
  }
  if (p < 1) {
    require(q < 1, ErrorKind::InfiniteDivergence, "KL(p||1) with p < 1");
    kl += (1 - p) * log((1 - p) / (1 - q));
  }
  return kl;
}

template <typename Scalar>
struct ProjectiveOptions {
  Scalar idempotence_tol = Scalar(1e-8);
  Scalar rho_floor = Scalar(1e-12);
};

template <typename Scalar>
struct ProjectiveResult {
  Scalar d = 0;          // tr P
  Scalar rho = 0;        // 1 - y^T P y / y^T y
  Scalar alpha_min = 0;  // rho d / ((1 - rho) n - d)
  Scalar lr = 0;         // (n/2) log y^T y - (n/2) KL(d/n || 1 - rho)
  Scalar kl = 0;
  /// The alpha-dependent log loss rank evaluated at alpha_min; equals lr.
  Scalar lr_at_alpha_min = 0;
};

/// Log loss rank of a projection at fixed alpha:
/// (n/2) log y^T y + (n/2) log(rho + a) - (d/2) log a - ((n - d)/2) log(1 + a).
template <typename Scalar>
Scalar projective_loss_rank_at_alpha(Scalar n, Scalar d, Scalar rho, Scalar yty, Scalar alpha) {
  using std::log;
  using std::log1p;
  return n / 2 * log(yty) + n / 2 * log(rho + alpha) - d / 2 * log(alpha) - (n - d) / 2 * log1p(alpha);
}

/// Closed-form minimum over alpha of the log loss rank of an orthogonal
/// projection P. Throws NotAProjection, PerfectFit or OutsideValidity when the
/// closed form does not apply; callers fall back to loss_rank().
template <typename Scalar>
ProjectiveResult<Scalar> projective_loss_rank(const HatMatrix<Scalar>& p, const Vector<Scalar>& y,
                                              const ProjectiveOptions<Scalar>& opts = {}) {
  p.validate();
  const Index n_rows = p.n();
  require(y.size() == n_rows, ErrorKind::InvalidInput, "response length does not match hat matrix");
  const Matrix<Scalar>& m = p.entries;
  const Scalar idem = (m * m - m).cwiseAbs().maxCoeff();
  const Scalar asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  require(idem <= opts.idempotence_tol && asym <= opts.idempotence_tol, ErrorKind::NotAProjection,
          "hat matrix is not an orthogonal projection (|P^2 - P| = " + std::to_string(static_cast<double>(idem)) +
              ")");

  const Scalar yty = y.squaredNorm();
  require(yty > 0, ErrorKind::DegenerateData, "observed response is identically zero");
  const Scalar n = Scalar(n_rows);

  ProjectiveResult<Scalar> out;
  out.d = m.trace();
  out.rho = (y - m * y).squaredNorm() / yty;
  require(out.rho >= opts.rho_floor, ErrorKind::PerfectFit, "projection reproduces y (rho below floor)");
  const Scalar denom = (1 - out.rho) * n - out.d;
  require(denom > 0, ErrorKind::OutsideValidity, "1 - rho <= d/n; closed form does not apply");
  out.alpha_min = out.rho * out.d / denom;
  require(out.alpha_min > 0, ErrorKind::OutsideValidity, "alpha_min is not positive");
  out.kl = kl_bernoulli(out.d / n, 1 - out.rho);
  out.lr = n / 2 * std::log(yty) - n / 2 * out.kl;
  out.lr_at_alpha_min = projective_loss_rank_at_alpha(n, out.d, out.rho, yty, out.alpha_min);
  return out;
}

template <typename Scalar>
struct ProjectiveCandidate {
  Scalar lr = 0;
  std::optional<Scalar> kl;  // set when the closed form applied
  std::optional<Scalar> alpha_star;
  bool closed_form = false;
  std::string failure;
};

template <typename Scalar>
struct ProjectiveSelection {
  std::size_t index = 0;
  std::vector<ProjectiveCandidate<Scalar>> candidates;
};

/// Best projection by minimal log loss rank, which for candidates inside the
/// validity region is the same as maximal KL(tr P / n || y^T P y / y^T y).
/// Candidates where the closed form does not apply are scored numerically.
template <typename Scalar>
ProjectiveSelection<Scalar> select_projective(const std::vector<HatMatrix<Scalar>>& candidates,
                                              const Vector<Scalar>& y,
                                              const LossRankOptions<Scalar>& fallback = {},
                                              const ProjectiveOptions<Scalar>& opts = {}) {
  require(!candidates.empty(), ErrorKind::InvalidInput, "candidate list is empty");
  ProjectiveSelection<Scalar> sel;
  sel.candidates.resize(candidates.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    ProjectiveCandidate<Scalar>& c = sel.candidates[i];
    try {
      try {
        const ProjectiveResult<Scalar> r = projective_loss_rank(candidates[i], y, opts);
        c.lr = r.lr;
        c.kl = r.kl;
        c.alpha_star = r.alpha_min;
        c.closed_form = true;
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::NotAProjection && e.kind() != ErrorKind::PerfectFit &&
            e.kind() != ErrorKind::OutsideValidity)
          throw;
        const LossRankResult<Scalar> r = loss_rank(candidates[i], y, fallback);
        c.lr = r.lr;
        c.alpha_star = r.alpha_star;
      }
    } catch (const Error& e) {
      c.failure = e.what();
      continue;
    }
    if (!best || c.lr < sel.candidates[*best].lr) best = i;
  }
  require(best.has_value(), ErrorKind::SelectionFailed, "every candidate failed");
  sel.index = *best;
  return sel;
}

}  // namespace lorp
