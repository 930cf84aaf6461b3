#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "lorp/scalar_search.hpp"
#include "lorp/types.hpp"

namespace lorp {

/// Which quadratic penalty regularizes the loss: alpha*||y||^2 or alpha*||M y||^2.
enum class PenaltyKind { ResponseNorm, EstimateNorm };

/// S_alpha = s0 + alpha * penalty_form, with s0 = (I - M)^T (I - M).
template <typename Scalar>
struct RegularizedForm {
  Matrix<Scalar> s0;
  Matrix<Scalar> penalty_form;  // I for ResponseNorm, M^T M for EstimateNorm
  PenaltyKind penalty = PenaltyKind::ResponseNorm;

  Matrix<Scalar> at(Scalar alpha) const { return s0 + alpha * penalty_form; }
};

template <typename Scalar>
RegularizedForm<Scalar> build_s0(const HatMatrix<Scalar>& hat,
                                 PenaltyKind penalty = PenaltyKind::ResponseNorm) {
  hat.validate();
  const Index n = hat.n();
  const Matrix<Scalar> residual = Matrix<Scalar>::Identity(n, n) - hat.entries;
  RegularizedForm<Scalar> form;
  form.penalty = penalty;
  form.s0 = residual.transpose() * residual;
  form.s0 = Scalar(0.5) * (form.s0 + form.s0.transpose()).eval();
  if (penalty == PenaltyKind::ResponseNorm) {
    form.penalty_form = Matrix<Scalar>::Identity(n, n);
  } else {
    form.penalty_form = hat.entries.transpose() * hat.entries;
    form.penalty_form = Scalar(0.5) * (form.penalty_form + form.penalty_form.transpose()).eval();
  }
  return form;
}

/// Everything needed to evaluate the log loss rank for any alpha in O(n):
///
///   loss(alpha)   = q0 + alpha * y_sq
///   logdet(alpha) = logdet_offset + sum_i log(lambdas_i + alpha * penalty_weights_i)
///
/// For the response-norm penalty, lambdas are the eigenvalues of S0 and all
/// weights are 1. For the estimate-norm penalty, lambdas are the generalized
/// eigenvalues mu of (S0, S0 + M^T M), weights are 1 - mu and the offset is
/// log det(S0 + M^T M).
template <typename Scalar>
struct SpectralCache {
  Vector<Scalar> lambdas;
  Vector<Scalar> penalty_weights;
  Scalar logdet_offset = 0;
  Scalar q0 = 0;
  Scalar y_sq = 0;
  Index n_total = 0;
  Index n_dropped = 0;
  bool generic_filtered = false;
  PenaltyKind penalty = PenaltyKind::ResponseNorm;

  Index n_kept() const { return lambdas.size(); }
};

template <typename Scalar>
struct CacheOptions {
  PenaltyKind penalty = PenaltyKind::ResponseNorm;
  bool filter_generic = false;
  /// Defaults to 1e-9 * max(1, max eigenvalue).
  std::optional<Scalar> zero_tol;
};

namespace detail {

template <typename Scalar>
Scalar clamp_nonnegative(Vector<Scalar>& values, Scalar tol, const char* what) {
  for (Index i = 0; i < values.size(); ++i) {
    if (values[i] < -tol) {
      fail(ErrorKind::NumericalFailure,
           std::string(what) + " has eigenvalue " + std::to_string(static_cast<double>(values[i])) +
               " below -zero_tol");
    }
    if (values[i] < 0) values[i] = 0;
  }
  return values.size() ? values.maxCoeff() : Scalar(0);
}

template <typename Scalar>
Scalar default_zero_tol(const Vector<Scalar>& eigenvalues) {
  const Scalar top = eigenvalues.size() ? eigenvalues.cwiseAbs().maxCoeff() : Scalar(0);
  return Scalar(1e-9) * std::max(Scalar(1), top);
}

}  // namespace detail

template <typename Scalar>
SpectralCache<Scalar> spectral_cache(const HatMatrix<Scalar>& hat, const Vector<Scalar>& y,
                                     const CacheOptions<Scalar>& opts = {}) {
  hat.validate();
  const Index n = hat.n();
  require(y.size() == n, ErrorKind::InvalidInput, "response length does not match hat matrix");
  require(all_finite(y), ErrorKind::InvalidInput, "response has non-finite entries");

  const RegularizedForm<Scalar> form = build_s0(hat, opts.penalty);
  const Vector<Scalar> residual = y - hat.entries * y;

  SpectralCache<Scalar> cache;
  cache.n_total = n;
  cache.penalty = opts.penalty;

  if (opts.penalty == PenaltyKind::EstimateNorm) {
    require(!opts.filter_generic, ErrorKind::InvalidInput,
            "generic-direction filtering is only defined for the response-norm penalty");
    // S0 + M^T M >= I/2, so it is always positive definite.
    const Matrix<Scalar> total = form.s0 + form.penalty_form;
    Eigen::LLT<Matrix<Scalar>> llt(total);
    require(llt.info() == Eigen::Success, ErrorKind::NumericalFailure,
            "S0 + M^T M is not numerically positive definite");
    cache.logdet_offset = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();

    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix<Scalar>> ges(
        form.s0, total, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
    require(ges.info() == Eigen::Success, ErrorKind::NumericalFailure,
            "generalized eigendecomposition failed");
    Vector<Scalar> mu = ges.eigenvalues();
    const Scalar tol = opts.zero_tol.value_or(Scalar(1e-9));
    detail::clamp_nonnegative(mu, tol, "S0 relative to S0 + M^T M");
    for (Index i = 0; i < mu.size(); ++i) {
      require(mu[i] <= 1 + tol, ErrorKind::NumericalFailure, "generalized eigenvalue above 1");
      mu[i] = std::min(mu[i], Scalar(1));
    }
    cache.lambdas = mu;
    cache.penalty_weights = Vector<Scalar>::Ones(n) - mu;
    cache.q0 = residual.squaredNorm();
    cache.y_sq = (hat.entries * y).squaredNorm();
    return cache;
  }

  if (!opts.filter_generic) {
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(form.s0, Eigen::EigenvaluesOnly);
    require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigendecomposition failed");
    Vector<Scalar> lambdas = es.eigenvalues();
    const Scalar tol = opts.zero_tol.value_or(detail::default_zero_tol(lambdas));
    detail::clamp_nonnegative(lambdas, tol, "S0");
    cache.lambdas = std::move(lambdas);
    cache.penalty_weights = Vector<Scalar>::Ones(n);
    cache.q0 = residual.squaredNorm();
    cache.y_sq = y.squaredNorm();
    return cache;
  }

  // Restrict S0 to the orthogonal complement of the constant vector.
  Matrix<Scalar> ones = Matrix<Scalar>::Ones(n, 1);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(ones);
  const Matrix<Scalar> q = qr.householderQ();
  const Matrix<Scalar> basis = q.rightCols(n - 1);
  Matrix<Scalar> restricted = basis.transpose() * form.s0 * basis;
  restricted = Scalar(0.5) * (restricted + restricted.transpose()).eval();

  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(restricted, Eigen::EigenvaluesOnly);
  require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigendecomposition failed");
  Vector<Scalar> lambdas = es.eigenvalues();
  const Scalar tol = opts.zero_tol.value_or(detail::default_zero_tol(lambdas));

  const Vector<Scalar> row_sums = hat.entries.rowwise().sum();
  const Scalar shift_error = (row_sums.array() - Scalar(1)).abs().maxCoeff();
  require(shift_error <= tol, ErrorKind::FilterInapplicable,
          "M 1 != 1 (max deviation " + std::to_string(static_cast<double>(shift_error)) + ")");

  detail::clamp_nonnegative(lambdas, tol, "S0");
  const Vector<Scalar> centered = y.array() - y.mean();
  cache.lambdas = std::move(lambdas);
  cache.penalty_weights = Vector<Scalar>::Ones(n - 1);
  cache.q0 = (centered - hat.entries * centered).squaredNorm();
  cache.y_sq = centered.squaredNorm();
  cache.n_dropped = 1;
  cache.generic_filtered = true;
  return cache;
}

/// log of the volume of the k-dimensional unit ball, pi^{k/2} / Gamma(k/2 + 1).
template <typename Scalar>
Scalar log_unit_ball_volume(Index k) {
  using std::lgamma;
  using std::log;
  const Scalar half_k = Scalar(k) / 2;
  return half_k * log(Scalar(M_PI)) - lgamma(half_k + 1);
}

template <typename Scalar>
Scalar loss_at_alpha(const SpectralCache<Scalar>& cache, Scalar alpha) {
  return cache.q0 + alpha * cache.y_sq;
}

template <typename Scalar>
Scalar logdet_at_alpha(const SpectralCache<Scalar>& cache, Scalar alpha) {
  using std::log;
  Scalar sum = cache.logdet_offset;
  for (Index i = 0; i < cache.lambdas.size(); ++i) {
    const Scalar axis = cache.lambdas[i] + alpha * cache.penalty_weights[i];
    if (!(axis > 0)) {
      fail(ErrorKind::Singularity, "S_alpha is singular at alpha = " +
                                       std::to_string(static_cast<double>(alpha)) +
                                       " (loss rank is +infinity)");
    }
    sum += log(axis);
  }
  return sum;
}

/// Log loss rank (n/2) log(y^T S_a y) - (1/2) log det S_a [+ log v_n].
template <typename Scalar>
Scalar loss_rank_at_alpha(const SpectralCache<Scalar>& cache, Scalar alpha, bool include_vn = false) {
  using std::log;
  require(alpha >= 0 && std::isfinite(static_cast<double>(alpha)), ErrorKind::InvalidInput,
          "alpha must be finite and nonnegative");
  const Scalar loss = loss_at_alpha(cache, alpha);
  require(loss > 0, ErrorKind::DegenerateData, "regularized loss of the observed data is zero");
  const Scalar logdet = logdet_at_alpha(cache, alpha);
  const Index k = cache.n_kept();
  Scalar lr = Scalar(k) / 2 * log(loss) - logdet / 2;
  if (include_vn) lr += log_unit_ball_volume<Scalar>(k);
  return lr;
}

template <typename Scalar>
struct AlphaOptimum {
  Scalar alpha_star = 0;
  Scalar lr_min = 0;
  bool flat = false;
};

template <typename Scalar>
AlphaOptimum<Scalar> optimize_alpha(const SpectralCache<Scalar>& cache, Scalar alpha_lo, Scalar alpha_hi,
                                    Scalar rel_tol, std::size_t grid_points = 128) {
  require(alpha_lo > 0 && alpha_hi > alpha_lo, ErrorKind::InvalidInput,
          "alpha bounds must satisfy 0 < lo < hi");
  grid_points = std::max<std::size_t>(grid_points, 64);
  Scalar scale = 1;
  auto objective = [&](Scalar alpha) {
    const Scalar v = loss_rank_at_alpha(cache, alpha, false);
    scale = std::max(scale, std::abs(v));
    return v;
  };
  const LogGridMinimum<Scalar> found = minimize_log_grid<Scalar>(objective, alpha_lo, alpha_hi, rel_tol,
                                                                 grid_points);
  AlphaOptimum<Scalar> out;
  if (found.total_variation < 10 * rel_tol * scale) {
    out.flat = true;
    out.alpha_star = std::sqrt(alpha_lo * alpha_hi);
    out.lr_min = loss_rank_at_alpha(cache, out.alpha_star, false);
  } else {
    out.alpha_star = found.argmin;
    out.lr_min = found.value;
  }
  return out;
}

template <typename Scalar>
struct LossRankOptions {
  PenaltyKind penalty = PenaltyKind::ResponseNorm;
  bool filter_generic = false;
  Scalar alpha_lo = Scalar(1e-8);
  Scalar alpha_hi = Scalar(1e6);
  Scalar rel_tol = Scalar(1e-10);
  std::size_t grid_points = 128;
  bool include_vn = false;
  std::optional<Scalar> zero_tol;
  /// Evaluate at this alpha instead of optimizing.
  std::optional<Scalar> fixed_alpha;
};

template <typename Scalar>
struct LossRankResult {
  Scalar alpha_star = 0;
  Scalar lr = 0;
  Scalar loss_at_alpha = 0;
  Scalar logdet_at_alpha = 0;
  Index n_kept = 0;
  bool include_vn = false;
  bool flat_objective = false;
};

template <typename Scalar>
LossRankResult<Scalar> loss_rank(const HatMatrix<Scalar>& hat, const Vector<Scalar>& y,
                                 const LossRankOptions<Scalar>& opts = {}) {
  const SpectralCache<Scalar> cache =
      spectral_cache(hat, y, CacheOptions<Scalar>{opts.penalty, opts.filter_generic, opts.zero_tol});
  LossRankResult<Scalar> out;
  if (opts.fixed_alpha) {
    out.alpha_star = *opts.fixed_alpha;
  } else {
    const AlphaOptimum<Scalar> opt =
        optimize_alpha(cache, opts.alpha_lo, opts.alpha_hi, opts.rel_tol, opts.grid_points);
    out.alpha_star = opt.alpha_star;
    out.flat_objective = opt.flat;
  }
  out.include_vn = opts.include_vn;
  out.n_kept = cache.n_kept();
  out.lr = loss_rank_at_alpha(cache, out.alpha_star, opts.include_vn);
  out.loss_at_alpha = loss_at_alpha(cache, out.alpha_star);
  out.logdet_at_alpha = logdet_at_alpha(cache, out.alpha_star);
  return out;
}

template <typename Scalar>
struct CandidateOutcome {
  std::optional<LossRankResult<Scalar>> result;
  std::string failure;

  bool ok() const { return result.has_value(); }
};

template <typename Scalar>
struct ModelSelection {
  std::size_t index = 0;
  std::vector<CandidateOutcome<Scalar>> outcomes;
};

/// Minimal loss rank over the candidates. Failed candidates are kept in the
/// outcome list but excluded from the argmin; ties go to the earlier index.
template <typename Scalar>
ModelSelection<Scalar> select_model(const std::vector<HatMatrix<Scalar>>& candidates, const Vector<Scalar>& y,
                                    const LossRankOptions<Scalar>& opts = {}) {
  require(!candidates.empty(), ErrorKind::InvalidInput, "candidate list is empty");
  ModelSelection<Scalar> sel;
  sel.outcomes.resize(candidates.size());
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    try {
      sel.outcomes[i].result = loss_rank(candidates[i], y, opts);
      if (!best || sel.outcomes[i].result->lr < sel.outcomes[*best].result->lr) best = i;
    } catch (const Error& e) {
      sel.outcomes[i].failure = e.what();
    }
  }
  require(best.has_value(), ErrorKind::SelectionFailed, "every candidate failed");
  sel.index = *best;
  return sel;
}

/// log |{y : y^T S_alpha y <= L}| for S_alpha with eigenvalues lambdas_i + alpha.
template <typename Scalar>
Scalar ellipsoid_volume(const Vector<Scalar>& lambdas, Scalar alpha, Scalar level) {
  using std::log;
  require(level >= 0, ErrorKind::InvalidInput, "loss level must be nonnegative");
  const Index n = lambdas.size();
  Scalar sum_log_axes = 0;
  for (Index i = 0; i < n; ++i) {
    const Scalar axis = lambdas[i] + alpha;
    require(axis > 0, ErrorKind::Singularity, "ellipsoid has an infinite axis");
    sum_log_axes += log(axis);
  }
  if (level == 0) return -std::numeric_limits<Scalar>::infinity();
  return log_unit_ball_volume<Scalar>(n) + Scalar(n) / 2 * log(level) - sum_log_axes / 2;
}

}  // namespace lorp
