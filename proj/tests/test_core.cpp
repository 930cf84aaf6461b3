#include <doctest.h>

#include <algorithm>
#include <numeric>

#include "lorp/core.hpp"
#include "lorp/projective.hpp"
#include "lorp/regressors.hpp"
#include "support.hpp"

using namespace lorp;
using lorp::test::mat;
using lorp::test::vec;

namespace {

const Matrix<double> kMean = mat({{.5, .5}, {.5, .5}});

HatMatrix<double> hat(const Matrix<double>& m) { return HatMatrix<double>(m); }

// Random row-stochastic smoother that is not symmetric.
Matrix<double> random_smoother(Index n, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  Matrix<double> m(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) m(i, j) = u(rng);
    m.row(i) /= m.row(i).sum();
  }
  return m;
}

}  // namespace

TEST_CASE("build_s0 on small hat matrices") {
  CHECK(build_s0(hat(Matrix<double>::Zero(2, 2))).s0.isApprox(Matrix<double>::Identity(2, 2)));
  CHECK(build_s0(hat(Matrix<double>::Identity(3, 3))).s0.isZero(0));

  const Matrix<double> expected = mat({{.5, -.5}, {-.5, .5}});
  CHECK(build_s0(hat(kMean)).s0.isApprox(expected, 1e-15));

  const auto est = build_s0(hat(kMean), PenaltyKind::EstimateNorm);
  CHECK(est.penalty_form.isApprox(kMean.transpose() * kMean));
  CHECK(est.at(2.0).isApprox(expected + 2.0 * kMean));
}

TEST_CASE("build_s0 is symmetric for a non-symmetric smoother") {
  std::mt19937_64 rng(1);
  const auto form = build_s0(hat(random_smoother(6, rng)));
  CHECK((form.s0 - form.s0.transpose()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("build_s0 rejects bad input") {
  CHECK_THROWS_AS(HatMatrix<double>(Matrix<double>::Zero(2, 3)), Error);
  Matrix<double> m = kMean;
  m(0, 1) = std::nan("");
  try {
    HatMatrix<double> h(m);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::InvalidInput);
  }
}

TEST_CASE("spectral_cache examples") {
  const Vector<double> y = vec({1, 2});

  SUBCASE("interpolator") {
    const auto c = spectral_cache(hat(Matrix<double>::Identity(2, 2)), y);
    CHECK(c.lambdas.isZero(0));
    CHECK(c.q0 == 0.0);
  }
  SUBCASE("mean regressor") {
    const auto c = spectral_cache(hat(kMean), y);
    REQUIRE(c.n_kept() == 2);
    CHECK(c.lambdas[0] == doctest::Approx(0.0));
    CHECK(c.lambdas[1] == doctest::Approx(1.0));
    CHECK(c.q0 == doctest::Approx(0.5));
    CHECK(c.y_sq == doctest::Approx(5.0));
    CHECK(c.n_dropped == 0);
  }
  SUBCASE("mean regressor with the generic direction filtered") {
    const auto c = spectral_cache(hat(kMean), y, CacheOptions<double>{PenaltyKind::ResponseNorm, true, {}});
    REQUIRE(c.n_kept() == 1);
    CHECK(c.lambdas[0] == doctest::Approx(1.0));
    CHECK(c.y_sq == doctest::Approx(0.5));
    CHECK(c.q0 == doctest::Approx(0.5));
    CHECK(c.n_dropped == 1);
    CHECK(c.n_total == 2);
    CHECK(c.generic_filtered);
  }
}

TEST_CASE("spectral_cache errors") {
  const Vector<double> y = vec({1, 2});
  SUBCASE("filter needs a shift-invariant regressor") {
    try {
      spectral_cache(hat(Matrix<double>::Zero(2, 2)), y, CacheOptions<double>{PenaltyKind::ResponseNorm, true, {}});
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::FilterInapplicable);
    }
  }
  SUBCASE("filter is not defined for the estimate penalty") {
    CHECK_THROWS_AS(spectral_cache(hat(kMean), y, CacheOptions<double>{PenaltyKind::EstimateNorm, true, {}}), Error);
  }
  SUBCASE("length mismatch") { CHECK_THROWS_AS(spectral_cache(hat(kMean), vec({1, 2, 3})), Error); }
}

TEST_CASE("spectral_cache invariants on random smoothers") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const Index n = 2 + trial % 7;
    const Matrix<double> m = random_smoother(n, rng);
    const Vector<double> y = test::gaussian_vector(n, rng);
    for (bool filter : {false, true}) {
      const auto c = spectral_cache(hat(m), y, CacheOptions<double>{PenaltyKind::ResponseNorm, filter, {}});
      CHECK(c.n_kept() + c.n_dropped == c.n_total);
      CHECK(std::is_sorted(c.lambdas.data(), c.lambdas.data() + c.lambdas.size()));
      CHECK(c.lambdas.minCoeff() >= 0.0);
      CHECK(c.q0 >= 0.0);
      CHECK(c.y_sq >= 0.0);
      // q0 is computed directly, never from the eigenvalues.
      CHECK(c.q0 == doctest::Approx(((Matrix<double>::Identity(n, n) - m) * y).squaredNorm()).epsilon(1e-12));
    }
  }
}

TEST_CASE("loss_rank_at_alpha examples") {
  SUBCASE("scalar zero regressor") {
    const auto c = spectral_cache(hat(Matrix<double>::Zero(1, 1)), vec({2}));
    CHECK(loss_rank_at_alpha(c, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  }
  SUBCASE("interpolator is alpha independent") {
    const Vector<double> y = vec({1, -2, 0.5});
    const auto c = spectral_cache(hat(Matrix<double>::Identity(3, 3)), y);
    for (double a : {1e-6, 0.3, 1.0, 1e5})
      CHECK(loss_rank_at_alpha(c, a) == doctest::Approx(1.5 * std::log(y.squaredNorm())).epsilon(1e-12));
  }
  SUBCASE("mean regressor at alpha = 1/8 equals log 3") {
    // High-precision evaluation: 1.09861228866810969...
    const auto c = spectral_cache(hat(kMean), vec({1, 2}));
    CHECK(loss_rank_at_alpha(c, 0.125) == doctest::Approx(1.0986122886681097).epsilon(1e-13));
  }
  SUBCASE("unit-ball term") {
    const auto c = spectral_cache(hat(kMean), vec({1, 2}));
    CHECK(loss_rank_at_alpha(c, 0.125, true) - loss_rank_at_alpha(c, 0.125) ==
          doctest::Approx(std::log(M_PI)).epsilon(1e-14));
    for (Index k = 1; k < 12; ++k)
      CHECK(log_unit_ball_volume<double>(k) == doctest::Approx(test::log_ball_volume(k)).epsilon(1e-13));
  }
}

TEST_CASE("loss_rank_at_alpha errors") {
  SUBCASE("zero response") {
    const auto c = spectral_cache(hat(kMean), vec({0, 0}));
    try {
      loss_rank_at_alpha(c, 1.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::DegenerateData);
    }
  }
  SUBCASE("alpha = 0 with singular S0") {
    const auto c = spectral_cache(hat(kMean), vec({1, 2}));
    try {
      loss_rank_at_alpha(c, 0.0);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Singularity);
    }
  }
  SUBCASE("alpha = 0 with nonsingular S0 is allowed") {
    const auto c = spectral_cache(hat(Matrix<double>::Zero(2, 2)), vec({1, 2}));
    CHECK(loss_rank_at_alpha(c, 0.0) == doctest::Approx(std::log(5.0)));
  }
}

TEST_CASE("loss_rank_at_alpha matches a dense determinant evaluation") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const Index n = 2 + trial % 6;
    const Matrix<double> m = random_smoother(n, rng);
    const Vector<double> y = test::gaussian_vector(n, rng);
    const Matrix<double> r = Matrix<double>::Identity(n, n) - m;
    for (double a : {1e-3, 0.2, 5.0}) {
      const Matrix<double> s_resp = r.transpose() * r + a * Matrix<double>::Identity(n, n);
      const Matrix<double> s_est = r.transpose() * r + a * m.transpose() * m;
      const auto c_resp = spectral_cache(hat(m), y);
      const auto c_est = spectral_cache(hat(m), y, CacheOptions<double>{PenaltyKind::EstimateNorm, false, {}});
      CHECK(test::close(loss_rank_at_alpha(c_resp, a), test::dense_loss_rank(s_resp, y), 1e-9));
      CHECK(test::close(loss_rank_at_alpha(c_est, a), test::dense_loss_rank(s_est, y), 1e-9));
    }
  }
}

TEST_CASE("optimize_alpha examples") {
  SUBCASE("interpolator is flat") {
    const auto c = spectral_cache(hat(Matrix<double>::Identity(2, 2)), vec({1, 2}));
    const auto opt = optimize_alpha(c, 1e-8, 1e6, 1e-10);
    CHECK(opt.flat);
    CHECK(opt.alpha_star == doctest::Approx(0.1));
    CHECK(opt.lr_min == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  SUBCASE("zero regressor is flat") {
    const auto c = spectral_cache(hat(Matrix<double>::Zero(2, 2)), vec({1, 2}));
    const auto opt = optimize_alpha(c, 1e-8, 1e6, 1e-10);
    CHECK(opt.flat);
    CHECK(opt.lr_min == doctest::Approx(std::log(5.0)).epsilon(1e-12));
  }
  SUBCASE("mean projection matches the closed-form alpha") {
    // rho = 0.1, d = 1, n = 2: alpha = rho d / ((1 - rho) n - d) = 0.125.
    const auto c = spectral_cache(hat(kMean), vec({1, 2}));
    const auto opt = optimize_alpha(c, 1e-8, 1e6, 1e-10);
    CHECK_FALSE(opt.flat);
    CHECK(opt.alpha_star == doctest::Approx(0.125).epsilon(1e-6));
    CHECK(opt.lr_min == doctest::Approx(1.0986122886681097).epsilon(1e-12));
  }
  SUBCASE("bad bounds") {
    const auto c = spectral_cache(hat(kMean), vec({1, 2}));
    CHECK_THROWS_AS(optimize_alpha(c, 0.0, 1.0, 1e-10), Error);
    CHECK_THROWS_AS(optimize_alpha(c, 2.0, 1.0, 1e-10), Error);
  }
}

TEST_CASE("optimize_alpha finds the global minimum of a sampled curve") {
  // Dense scan oracle on random smoothers.
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial % 5;
    const auto c = spectral_cache(hat(random_smoother(n, rng)), test::gaussian_vector(n, rng));
    const auto opt = optimize_alpha(c, 1e-8, 1e6, 1e-10);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= 4000; ++i) best = std::min(best, loss_rank_at_alpha(c, std::pow(10.0, -8.0 + 14.0 * i / 4000)));
    CHECK(opt.lr_min <= best + 1e-9 * std::max(1.0, std::abs(best)));
  }
}

TEST_CASE("loss_rank examples") {
  const Vector<double> y = vec({1, 2});
  const auto interp = loss_rank(hat(Matrix<double>::Identity(2, 2)), y);
  CHECK(interp.flat_objective);
  CHECK(interp.lr == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  const auto zero = loss_rank(hat(Matrix<double>::Zero(2, 2)), y);
  CHECK(zero.flat_objective);
  CHECK(zero.lr == doctest::Approx(std::log(5.0)).epsilon(1e-12));

  const auto mean = loss_rank(hat(kMean), y);
  CHECK_FALSE(mean.flat_objective);
  CHECK(mean.lr == doctest::Approx(1.0986122886681097).epsilon(1e-12));
  CHECK(mean.alpha_star == doctest::Approx(0.125).epsilon(1e-6));
  CHECK(mean.lr < zero.lr);
  CHECK(mean.lr < interp.lr);

  // Result fields are consistent with each other.
  CHECK(mean.lr == doctest::Approx(std::log(mean.loss_at_alpha) - mean.logdet_at_alpha / 2).epsilon(1e-14));
  CHECK(mean.loss_at_alpha > 0);

  LossRankOptions<double> fixed;
  fixed.fixed_alpha = 0.125;
  fixed.include_vn = true;
  const auto at = loss_rank(hat(kMean), y, fixed);
  CHECK(at.alpha_star == 0.125);
  CHECK(at.include_vn);
  CHECK(at.lr == doctest::Approx(std::log(3.0) + std::log(M_PI)).epsilon(1e-13));
}

TEST_CASE("select_model") {
  const Vector<double> y = vec({1, 2});
  const std::vector<HatMatrix<double>> cands{hat(Matrix<double>::Zero(2, 2)), hat(kMean),
                                             hat(Matrix<double>::Identity(2, 2))};
  const auto sel = select_model(cands, y);
  CHECK(sel.index == 1);
  CHECK(sel.outcomes.size() == 3);

  CHECK(select_model(std::vector{hat(kMean)}, y).index == 0);
  CHECK(select_model(std::vector{hat(kMean), hat(kMean)}, y).index == 0);
  CHECK_THROWS_AS(select_model(std::vector<HatMatrix<double>>{}, y), Error);

  SUBCASE("failed candidates are excluded") {
    LossRankOptions<double> opts;
    opts.filter_generic = true;  // the zero regressor is not shift invariant
    const auto s = select_model(cands, y, opts);
    CHECK_FALSE(s.outcomes[0].ok());
    CHECK_FALSE(s.outcomes[0].failure.empty());
    CHECK(s.outcomes[1].ok());
  }
  SUBCASE("all failed") {
    try {
      select_model(std::vector{hat(kMean)}, vec({0, 0}));
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::SelectionFailed);
    }
  }
}

TEST_CASE("ellipsoid_volume") {
  CHECK(ellipsoid_volume(vec({0}), 1.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
  CHECK(ellipsoid_volume(vec({1, 1}), 0.0, 1.0) == doctest::Approx(std::log(M_PI)).epsilon(1e-14));
  CHECK(ellipsoid_volume(vec({1, 3}), 0.0, 2.0) == doctest::Approx(1.2885709220752906).epsilon(1e-13));
  CHECK_THROWS_AS(ellipsoid_volume(vec({1, 1}), 0.0, -1.0), Error);
  CHECK_THROWS_AS(ellipsoid_volume(vec({0, 1}), 0.0, 1.0), Error);

  // Strictly increasing in L.
  double prev = ellipsoid_volume(vec({0.5, 2, 3}), 0.1, 1e-3);
  for (double level = 2e-3; level < 100; level *= 1.7) {
    const double v = ellipsoid_volume(vec({0.5, 2, 3}), 0.1, level);
    CHECK(v > prev);
    prev = v;
  }
}

TEST_CASE("alpha limits") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 40; ++trial) {
    const Index n = 2 + trial % 8;
    const auto c = spectral_cache(hat(random_smoother(n, rng)), test::gaussian_vector(n, rng));
    // alpha -> infinity: (n_kept / 2) log y_sq.
    const double limit = static_cast<double>(c.n_kept()) / 2 * std::log(c.y_sq);
    CHECK(test::close(loss_rank_at_alpha(c, 1e12), limit, 1e-4));
    // Row-stochastic smoothers have a zero eigenvalue, so LR diverges at 0.
    CHECK(loss_rank_at_alpha(c, 1e-12) > loss_rank_at_alpha(c, 1.0) + 5);
  }
}

TEST_CASE("permutation equivariance") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 3 + trial % 6;
    const Matrix<double> m = random_smoother(n, rng);
    const Vector<double> y = test::gaussian_vector(n, rng);
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> p(n);
    for (Index i = 0; i < n; ++i) p.indices()[i] = order[static_cast<std::size_t>(i)];
    const Matrix<double> pm = p * m * p.transpose();
    const Vector<double> py = p * y;

    const auto a = loss_rank(hat(m), y);
    const auto b = loss_rank(hat(pm), py);
    CHECK(test::close(a.lr, b.lr, 1e-10));
    CHECK(test::close(a.alpha_star, b.alpha_star, 1e-6));
  }
}

TEST_CASE("loss rank ordering agrees with the discrete ranks of the two-point example") {
  // Exact ranks are r0 = 8, r1 = 7, r2 = 9, so at a small common alpha the
  // mean regressor must have the smallest loss volume. r2 is degenerate at
  // alpha -> 0 (zero loss), so only r1 < r0 is comparable.
  const Vector<double> y = vec({1, 2});
  const auto zero = spectral_cache(hat(Matrix<double>::Zero(2, 2)), y);
  const auto mean = spectral_cache(hat(kMean), y);
  for (double a : {0.05, 0.1, 0.125, 0.2}) CHECK(loss_rank_at_alpha(mean, a) < loss_rank_at_alpha(zero, a));
}
