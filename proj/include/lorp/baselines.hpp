#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include <cmath>
#include <complex>
#include <optional>

#include "lorp/regressors.hpp"
#include "lorp/scalar_search.hpp"

namespace lorp {

template <typename Scalar>
struct InformationCriteria {
  Scalar aic = 0;
  Scalar bic = 0;
};

/// Gaussian-noise penalized ML with the ML variance plugged in; constant
/// terms are dropped: (n/2) log(rss/n) + d and (n/2) log(rss/n) + (d/2) log n.
template <typename Scalar>
InformationCriteria<Scalar> aic_bic(Scalar rss, Scalar d, Index n) {
  using std::log;
  require(n > 0, ErrorKind::InvalidInput, "n must be positive");
  require(rss > 0, ErrorKind::PerfectFit, "residual sum of squares is zero (score is -infinity)");
  const Scalar fit = Scalar(n) / 2 * log(rss / Scalar(n));
  return {fit + d, fit + d / 2 * log(Scalar(n))};
}

enum class PriorKind { Identity, Gram };

template <typename Scalar>
struct BmsConfig {
  Scalar alpha = 1;
  /// Noise precision; nullopt selects the self-consistent ML estimate.
  std::optional<Scalar> beta;
  PriorKind prior = PriorKind::Identity;
};

template <typename Scalar>
struct BmsResult {
  Scalar neg_log_evidence = 0;
  Scalar beta = 0;
  /// First ML update n / y^T S y starting from beta = n / y^T y (AUTO only).
  Scalar beta_one_shot = 0;
  int iterations = 0;
  Scalar yt_s_y = 0;
  Scalar logdet_s = 0;
};

namespace detail {

template <typename Scalar>
struct EvidenceTerms {
  Scalar yt_s_y = 0;
  Scalar logdet_s = 0;
};

// Sufficient statistics of (Phi, y) for the evidence.
template <typename Scalar>
struct EvidenceInputs {
  Matrix<Scalar> gram;  // B = Phi^T Phi
  Vector<Scalar> phi_t_y;
  Scalar yty = 0;
  Scalar logdet_gram = 0;  // only needed for the Gram prior
  Index d = 0;

  EvidenceInputs(const FeatureMatrix<Scalar>& f, const Vector<Scalar>& y, PriorKind prior)
      : gram(f.phi.transpose() * f.phi), phi_t_y(f.phi.transpose() * y), yty(y.squaredNorm()), d(f.d()) {
    if (prior == PriorKind::Gram && d > 0) {
      Eigen::LLT<Matrix<Scalar>> llt(gram);
      require(llt.info() == Eigen::Success, ErrorKind::Singularity, "Gram prior needs full-rank features");
      logdet_gram = 2 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
    }
  }
};

// S = I - beta Phi A^{-1} Phi^T with A = alpha C + beta B. By Woodbury and the
// determinant lemma, y^T S y = y^T y - beta (Phi^T y)^T A^{-1} Phi^T y and
// log det S = log det(alpha C) - log det A.
template <typename Scalar>
EvidenceTerms<Scalar> evidence_terms(const EvidenceInputs<Scalar>& in, Scalar alpha, Scalar beta, PriorKind prior) {
  using std::log;
  if (in.d == 0) return {in.yty, Scalar(0)};
  const Matrix<Scalar> c = prior == PriorKind::Identity ? Matrix<Scalar>::Identity(in.d, in.d) : in.gram;
  const Matrix<Scalar> a = alpha * c + beta * in.gram;
  Eigen::LLT<Matrix<Scalar>> llt_a(a);
  require(llt_a.info() == Eigen::Success, ErrorKind::Singularity, "A = alpha C + beta B is singular");
  const Scalar logdet_a = 2 * llt_a.matrixL().toDenseMatrix().diagonal().array().log().sum();
  const Scalar logdet_c = prior == PriorKind::Identity ? Scalar(0) : in.logdet_gram;
  EvidenceTerms<Scalar> t;
  t.yt_s_y = in.yty - beta * in.phi_t_y.dot(llt_a.solve(in.phi_t_y));
  t.logdet_s = Scalar(in.d) * log(alpha) + logdet_c - logdet_a;
  return t;
}

}  // namespace detail

/// Negative log evidence of Gaussian Bayesian linear basis function regression.
/// Fixed beta: (beta/2) y^T S y - (1/2) log det S - (n/2) log(beta / 2 pi).
/// AUTO beta: beta = n / y^T S y solved self-consistently (S depends on beta),
/// giving (n/2) log y^T S y - (1/2) log det S - (n/2) log(n / (2 pi e)).
template <typename Scalar>
BmsResult<Scalar> bms_neg_log_evidence(const FeatureMatrix<Scalar>& f, const Vector<Scalar>& y,
                                       const BmsConfig<Scalar>& cfg) {
  using std::log;
  require(f.n() == y.size(), ErrorKind::InvalidInput, "feature rows do not match response length");
  require(cfg.alpha > 0, ErrorKind::InvalidInput, "prior precision alpha must be positive");
  const Scalar n = Scalar(y.size());
  const Scalar two_pi = 2 * Scalar(M_PI);
  const detail::EvidenceInputs<Scalar> inputs(f, y, cfg.prior);
  BmsResult<Scalar> out;

  if (cfg.beta) {
    require(*cfg.beta > 0, ErrorKind::InvalidInput, "noise precision beta must be positive");
    const auto t = detail::evidence_terms(inputs, cfg.alpha, *cfg.beta, cfg.prior);
    out.beta = *cfg.beta;
    out.yt_s_y = t.yt_s_y;
    out.logdet_s = t.logdet_s;
    out.neg_log_evidence = out.beta / 2 * t.yt_s_y - t.logdet_s / 2 - n / 2 * log(out.beta / two_pi);
    return out;
  }

  const Scalar yty = y.squaredNorm();
  require(yty > 0, ErrorKind::DegenerateData, "observed response is identically zero");
  auto update = [&](Scalar beta) {
    const Scalar q = detail::evidence_terms(inputs, cfg.alpha, beta, cfg.prior).yt_s_y;
    require(q > 0, ErrorKind::PerfectFit, "y^T S y vanished");
    return n / q;
  };
  // Aitken-accelerated fixed-point iteration on beta = n / y^T S(beta) y.
  Scalar beta = n / yty;
  out.beta_one_shot = update(beta);
  bool converged = false;
  for (int it = 1; it <= 100 && !converged; ++it) {
    const Scalar b1 = update(beta);
    const Scalar b2 = update(b1);
    const Scalar denom = b2 - 2 * b1 + beta;
    Scalar next = b2;
    if (denom != 0) {
      const Scalar accelerated = beta - (b1 - beta) * (b1 - beta) / denom;
      if (accelerated > 0 && std::isfinite(static_cast<double>(accelerated))) next = accelerated;
    }
    converged = std::abs(next - beta) <= Scalar(1e-10) * next || std::abs(update(next) - next) <= Scalar(1e-12) * next;
    beta = next;
    out.iterations = it;
  }
  require(converged, ErrorKind::NumericalFailure, "beta fixed-point iteration did not converge");
  const auto t = detail::evidence_terms(inputs, cfg.alpha, beta, cfg.prior);
  out.beta = beta;
  out.yt_s_y = t.yt_s_y;
  out.logdet_s = t.logdet_s;
  out.neg_log_evidence = n / 2 * log(t.yt_s_y) - t.logdet_s / 2 - n / 2 * log(n / (two_pi * Scalar(M_E)));
  return out;
}

template <typename Scalar>
struct BmsOptimum {
  Scalar alpha = 0;
  BmsResult<Scalar> result;
};

/// Minimum over the prior precision alpha of the negative log evidence.
template <typename Scalar>
BmsOptimum<Scalar> bms_minimize_alpha(const FeatureMatrix<Scalar>& f, const Vector<Scalar>& y,
                                      PriorKind prior = PriorKind::Identity,
                                      std::optional<Scalar> beta = std::nullopt,
                                      Scalar alpha_lo = Scalar(1e-8), Scalar alpha_hi = Scalar(1e8),
                                      Scalar rel_tol = Scalar(1e-10)) {
  auto objective = [&](Scalar alpha) {
    return bms_neg_log_evidence(f, y, BmsConfig<Scalar>{alpha, beta, prior}).neg_log_evidence;
  };
  BmsOptimum<Scalar> out;
  out.alpha = minimize_log_grid<Scalar>(objective, alpha_lo, alpha_hi, rel_tol, 128).argmin;
  out.result = bms_neg_log_evidence(f, y, BmsConfig<Scalar>{out.alpha, beta, prior});
  return out;
}

/// Effective number of parameters tr M.
template <typename Scalar>
Scalar d_eff_trace(const HatMatrix<Scalar>& hat) {
  return hat.entries.trace();
}

/// d - alpha tr A^{-1}.
template <typename Scalar>
Scalar d_eff_mackay(Scalar alpha, const Matrix<Scalar>& a, Index d) {
  require(alpha > 0, ErrorKind::InvalidInput, "alpha must be positive");
  require(a.rows() == a.cols() && a.rows() == d, ErrorKind::InvalidInput, "A must be d x d");
  if (d == 0) return 0;
  Eigen::LDLT<Matrix<Scalar>> ldlt(a);
  require(ldlt.info() == Eigen::Success && ldlt.isPositive() && ldlt.vectorD().cwiseAbs().minCoeff() > 0,
          ErrorKind::Singularity, "A is singular");
  const Matrix<Scalar> inv = ldlt.solve(Matrix<Scalar>::Identity(d, d));
  return Scalar(d) - alpha * inv.trace();
}

/// A = alpha I + beta Phi^T Phi (identity prior).
template <typename Scalar>
Matrix<Scalar> posterior_precision(const FeatureMatrix<Scalar>& f, Scalar alpha, Scalar beta) {
  return alpha * Matrix<Scalar>::Identity(f.d(), f.d()) + beta * f.phi.transpose() * f.phi;
}

/// Posterior mean w = beta A^{-1} Phi^T y (identity prior).
template <typename Scalar>
Vector<Scalar> posterior_mean(const FeatureMatrix<Scalar>& f, const Vector<Scalar>& y, Scalar alpha, Scalar beta) {
  const Matrix<Scalar> a = posterior_precision(f, alpha, beta);
  return beta * a.llt().solve(f.phi.transpose() * y);
}

/// The alpha at which the evidence is stationary in alpha for fixed beta,
/// i.e. alpha |w|^2 = d - alpha tr A^{-1}. Solved by bisection in log alpha.
template <typename Scalar>
Scalar evidence_stationary_alpha(const FeatureMatrix<Scalar>& f, const Vector<Scalar>& y, Scalar beta,
                                 Scalar alpha_lo = Scalar(1e-10), Scalar alpha_hi = Scalar(1e10)) {
  using std::exp;
  using std::log;
  require(f.d() > 0, ErrorKind::InvalidInput, "needs at least one feature");
  require(beta > 0, ErrorKind::InvalidInput, "noise precision beta must be positive");
  // In the eigenbasis of B = Phi^T Phi both sides are sums over eigenvalues
  // b_i, which avoids the cancellation in d - alpha tr A^{-1} at large alpha:
  //   alpha |w|^2 = sum alpha beta^2 c_i^2 / (alpha + beta b_i)^2
  //   d_eff       = sum beta b_i / (alpha + beta b_i)
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(f.phi.transpose() * f.phi);
  require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigendecomposition failed");
  const Vector<Scalar> b = es.eigenvalues().cwiseMax(Scalar(0));
  const Vector<Scalar> c = es.eigenvectors().transpose() * (f.phi.transpose() * y);
  auto gap = [&](Scalar alpha) {
    Scalar fit = 0, d_eff = 0;
    for (Index i = 0; i < b.size(); ++i) {
      const Scalar denom = alpha + beta * b[i];
      fit += alpha * beta * beta * c[i] * c[i] / (denom * denom);
      d_eff += beta * b[i] / denom;
    }
    return fit - d_eff;
  };
  Scalar lo = log(alpha_lo);
  Scalar hi = log(alpha_hi);
  require(gap(exp(lo)) < 0 && gap(exp(hi)) > 0, ErrorKind::NumericalFailure,
          "no sign change bracketing the stationary alpha");
  for (int it = 0; it < 200 && hi - lo > Scalar(1e-15); ++it) {
    const Scalar mid = (lo + hi) / 2;
    if (gap(exp(mid)) < 0)
      lo = mid;
    else
      hi = mid;
  }
  return exp((lo + hi) / 2);
}

/// sum_{s=1..order} tr(M^s) / s, the expansion of -(1/2) log det (I-M)^T (I-M).
template <typename Scalar>
Scalar logdet_penalty_series(const HatMatrix<Scalar>& hat, int order) {
  require(order >= 1, ErrorKind::InvalidInput, "series order must be at least 1");
  const Matrix<Scalar>& m = hat.entries;
  Eigen::EigenSolver<Matrix<Scalar>> es(m, false);
  require(es.info() == Eigen::Success, ErrorKind::NumericalFailure, "eigenvalue computation failed");
  const Scalar radius = es.eigenvalues().cwiseAbs().maxCoeff();
  require(radius < 1, ErrorKind::DivergentSeries,
          "spectral radius " + std::to_string(static_cast<double>(radius)) + " >= 1");
  Scalar sum = 0;
  Matrix<Scalar> power = m;
  for (int s = 1; s <= order; ++s) {
    sum += power.trace() / Scalar(s);
    if (s < order) power = (power * m).eval();
  }
  return sum;
}

}  // namespace lorp
